#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "reident/errors.hpp"

namespace reident {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

/// 1-based line number containing byte_pos, for parse error messages.
inline std::size_t line_of_byte(std::string_view content, std::size_t byte_pos) {
    std::size_t line = 1;
    const std::size_t n = byte_pos < content.size() ? byte_pos : content.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (content[i] == '\n') {
            ++line;
        }
    }
    return line;
}

}  // namespace reident
