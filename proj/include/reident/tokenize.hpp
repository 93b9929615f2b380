#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "reident/unicode.hpp"

namespace reident {

/// Lowercased word tokenization used by the sparse index and by word-level
/// metrics. Splits on every non-word code point, so punctuation and hyphens
/// separate tokens: "état-civil" yields {"état", "civil"}.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = decode_cp(text, i);
        if (is_word_cp(cp)) {
            append_utf8(current, to_lower_cp(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

}  // namespace reident
