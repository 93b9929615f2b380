#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace reident {

// All span and chunk offsets in this library are Unicode scalar (code point)
// offsets into UTF-8 text, not byte offsets. The helpers here convert
// between the two and provide the small amount of character classification
// the tokenizer and value canonicalization need.

/// Decode one code point starting at byte i; advances i. Invalid sequences
/// decode to U+FFFD one byte at a time.
inline char32_t decode_cp(std::string_view s, std::size_t& i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int len;
    if (c >= 0xF0) {
        len = 4;
    } else if (c >= 0xE0) {
        len = 3;
    } else if (c >= 0xC0) {
        len = 2;
    } else {
        ++i;
        return 0xFFFD;  // stray continuation byte
    }
    if (i + static_cast<std::size_t>(len) > s.size()) {
        ++i;
        return 0xFFFD;
    }
    char32_t cp = c & (0x3F >> (len - 1));
    for (int k = 1; k < len; ++k) {
        const auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += static_cast<std::size_t>(len);
    if (cp >= 0xD800 && cp <= 0xDFFF) {
        return 0xFFFD;
    }
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        out.push_back(decode_cp(s, i));
    }
    return out;
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        append_utf8(out, cp);
    }
    return out;
}

inline std::size_t cp_length(std::string_view s) {
    std::size_t i = 0;
    std::size_t n = 0;
    while (i < s.size()) {
        decode_cp(s, i);
        ++n;
    }
    return n;
}

/// Byte offset of the cp_index-th code point; clamps to s.size() past the end.
inline std::size_t byte_offset(std::string_view s, std::size_t cp_index) {
    std::size_t i = 0;
    std::size_t n = 0;
    while (i < s.size() && n < cp_index) {
        decode_cp(s, i);
        ++n;
    }
    return i;
}

/// Slice by code-point offsets, [cp_start, cp_end).
inline std::string cp_slice(std::string_view s, std::size_t cp_start, std::size_t cp_end) {
    const std::size_t b0 = byte_offset(s, cp_start);
    const std::size_t b1 = byte_offset(s, cp_end);
    return std::string(s.substr(b0, b1 > b0 ? b1 - b0 : 0));
}

inline bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ':
        case U'\t':
        case U'\n':
        case U'\r':
        case U'\f':
        case U'\v':
        case 0x0085:   // next line
        case 0x00A0:   // no-break space
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

/// Word characters for tokenization: ASCII alphanumerics plus the letter
/// ranges this library's corpora actually contain (Latin, Greek, Cyrillic,
/// Hebrew, Arabic, kana, CJK) and combining marks, which stay attached to
/// the letter they follow.
inline bool is_word_cp(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
               (cp >= U'A' && cp <= U'Z');
    }
    if (cp == 0x00D7 || cp == 0x00F7) {
        return false;  // multiplication / division signs
    }
    struct Range {
        char32_t lo, hi;
    };
    static constexpr Range ranges[] = {
        {0x00C0, 0x024F},  // Latin-1 letters, Latin Extended-A/B
        {0x0300, 0x036F},  // combining diacritical marks
        {0x0386, 0x0386},  {0x0388, 0x03FF},  // Greek
        {0x0400, 0x04FF},  // Cyrillic
        {0x05D0, 0x05EA},  // Hebrew
        {0x0620, 0x064A},  {0x0660, 0x0669},  // Arabic letters and digits
        {0x3041, 0x3096},  {0x30A1, 0x30FA},  // kana
        {0x4E00, 0x9FFF},  // CJK unified ideographs
    };
    for (const auto& r : ranges) {
        if (cp >= r.lo && cp <= r.hi) {
            return cp != 0x0387;
        }
    }
    return false;
}

/// Simple case folding for the ranges is_word_cp accepts. Identity elsewhere.
inline char32_t to_lower_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') {
        return cp + 0x20;
    }
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) {
        return cp + 0x20;
    }
    if (cp >= 0x0100 && cp <= 0x0137) {
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x0139 && cp <= 0x0148) {
        return (cp % 2 == 1) ? cp + 1 : cp;
    }
    if (cp >= 0x014A && cp <= 0x0177) {
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp == 0x0178) {
        return 0x00FF;  // Y with diaeresis
    }
    if (cp >= 0x0179 && cp <= 0x017E) {
        return (cp % 2 == 1) ? cp + 1 : cp;
    }
    if (cp == 0x0386) {
        return 0x03AC;
    }
    if (cp >= 0x0388 && cp <= 0x038A) {
        return cp + 0x25;
    }
    if (cp == 0x038C) {
        return 0x03CC;
    }
    if (cp == 0x038E || cp == 0x038F) {
        return cp + 0x3F;
    }
    if (cp >= 0x0391 && cp <= 0x03AB && cp != 0x03A2) {
        return cp + 0x20;
    }
    if (cp >= 0x0400 && cp <= 0x040F) {
        return cp + 0x50;
    }
    if (cp >= 0x0410 && cp <= 0x042F) {
        return cp + 0x20;
    }
    return cp;
}

namespace detail {

struct Composition {
    char32_t base;
    char32_t mark;
    char32_t composed;
};

// Canonical composition pairs for the Latin repertoire this library's text
// passes through. Sorted by (mark, base) for binary search.
inline const std::array<Composition, 117>& composition_table() {
    static const std::array<Composition, 117> table = [] {
        std::array<Composition, 117> t{{
            // grave
            {U'A', 0x300, 0x00C0}, {U'E', 0x300, 0x00C8}, {U'I', 0x300, 0x00CC},
            {U'O', 0x300, 0x00D2}, {U'U', 0x300, 0x00D9},
            {U'a', 0x300, 0x00E0}, {U'e', 0x300, 0x00E8}, {U'i', 0x300, 0x00EC},
            {U'o', 0x300, 0x00F2}, {U'u', 0x300, 0x00F9},
            // acute
            {U'A', 0x301, 0x00C1}, {U'C', 0x301, 0x0106}, {U'E', 0x301, 0x00C9},
            {U'I', 0x301, 0x00CD}, {U'L', 0x301, 0x0139}, {U'N', 0x301, 0x0143},
            {U'O', 0x301, 0x00D3}, {U'R', 0x301, 0x0154}, {U'S', 0x301, 0x015A},
            {U'U', 0x301, 0x00DA}, {U'Y', 0x301, 0x00DD}, {U'Z', 0x301, 0x0179},
            {U'a', 0x301, 0x00E1}, {U'c', 0x301, 0x0107}, {U'e', 0x301, 0x00E9},
            {U'i', 0x301, 0x00ED}, {U'l', 0x301, 0x013A}, {U'n', 0x301, 0x0144},
            {U'o', 0x301, 0x00F3}, {U'r', 0x301, 0x0155}, {U's', 0x301, 0x015B},
            {U'u', 0x301, 0x00FA}, {U'y', 0x301, 0x00FD}, {U'z', 0x301, 0x017A},
            // circumflex
            {U'A', 0x302, 0x00C2}, {U'E', 0x302, 0x00CA}, {U'I', 0x302, 0x00CE},
            {U'O', 0x302, 0x00D4}, {U'U', 0x302, 0x00DB}, {U'W', 0x302, 0x0174},
            {U'Y', 0x302, 0x0176},
            {U'a', 0x302, 0x00E2}, {U'e', 0x302, 0x00EA}, {U'i', 0x302, 0x00EE},
            {U'o', 0x302, 0x00F4}, {U'u', 0x302, 0x00FB}, {U'w', 0x302, 0x0175},
            {U'y', 0x302, 0x0177},
            // tilde
            {U'A', 0x303, 0x00C3}, {U'I', 0x303, 0x0128}, {U'N', 0x303, 0x00D1},
            {U'O', 0x303, 0x00D5}, {U'U', 0x303, 0x0168},
            {U'a', 0x303, 0x00E3}, {U'i', 0x303, 0x0129}, {U'n', 0x303, 0x00F1},
            {U'o', 0x303, 0x00F5}, {U'u', 0x303, 0x0169},
            // macron
            {U'A', 0x304, 0x0100}, {U'E', 0x304, 0x0112}, {U'I', 0x304, 0x012A},
            {U'O', 0x304, 0x014C}, {U'U', 0x304, 0x016A},
            {U'a', 0x304, 0x0101}, {U'e', 0x304, 0x0113}, {U'i', 0x304, 0x012B},
            {U'o', 0x304, 0x014D}, {U'u', 0x304, 0x016B},
            // breve
            {U'A', 0x306, 0x0102}, {U'G', 0x306, 0x011E}, {U'U', 0x306, 0x016C},
            {U'a', 0x306, 0x0103}, {U'g', 0x306, 0x011F}, {U'u', 0x306, 0x016D},
            // dot above
            {U'C', 0x307, 0x010A}, {U'E', 0x307, 0x0116}, {U'G', 0x307, 0x0120},
            {U'I', 0x307, 0x0130}, {U'Z', 0x307, 0x017B},
            {U'c', 0x307, 0x010B}, {U'e', 0x307, 0x0117}, {U'g', 0x307, 0x0121},
            {U'z', 0x307, 0x017C},
            // diaeresis
            {U'A', 0x308, 0x00C4}, {U'E', 0x308, 0x00CB}, {U'I', 0x308, 0x00CF},
            {U'O', 0x308, 0x00D6}, {U'U', 0x308, 0x00DC}, {U'Y', 0x308, 0x0178},
            {U'a', 0x308, 0x00E4}, {U'e', 0x308, 0x00EB}, {U'i', 0x308, 0x00EF},
            {U'o', 0x308, 0x00F6}, {U'u', 0x308, 0x00FC}, {U'y', 0x308, 0x00FF},
            // ring above
            {U'A', 0x30A, 0x00C5}, {U'U', 0x30A, 0x016E},
            {U'a', 0x30A, 0x00E5}, {U'u', 0x30A, 0x016F},
            // double acute
            {U'O', 0x30B, 0x0150}, {U'U', 0x30B, 0x0170},
            {U'o', 0x30B, 0x0151}, {U'u', 0x30B, 0x0171},
            // caron
            {U'C', 0x30C, 0x010C}, {U'E', 0x30C, 0x011A}, {U'S', 0x30C, 0x0160},
            {U'Z', 0x30C, 0x017D},
            {U'c', 0x30C, 0x010D}, {U'e', 0x30C, 0x011B}, {U's', 0x30C, 0x0161},
            {U'z', 0x30C, 0x017E},
            // cedilla
            {U'C', 0x327, 0x00C7}, {U'S', 0x327, 0x015E}, {U'T', 0x327, 0x0162},
            {U'c', 0x327, 0x00E7}, {U's', 0x327, 0x015F}, {U't', 0x327, 0x0163},
        }};
        std::sort(t.begin(), t.end(), [](const Composition& x, const Composition& y) {
            return x.mark != y.mark ? x.mark < y.mark : x.base < y.base;
        });
        return t;
    }();
    return table;
}

}  // namespace detail

/// Compose base + combining mark into the precomposed code point, or 0 when
/// no composition is known. Coverage is the common Latin repertoire.
inline char32_t compose_pair(char32_t base, char32_t mark) {
    const auto& table = detail::composition_table();
    auto it = std::lower_bound(
        table.begin(), table.end(), std::make_pair(mark, base),
        [](const detail::Composition& c, const std::pair<char32_t, char32_t>& key) {
            return c.mark != key.first ? c.mark < key.first : c.base < key.second;
        });
    if (it != table.end() && it->mark == mark && it->base == base) {
        return it->composed;
    }
    return 0;
}

/// Canonical form used when comparing span values: compose combining marks
/// (Latin coverage), trim surrounding whitespace, collapse internal
/// whitespace runs to a single space. Case is preserved.
inline std::string canonical_value(std::string_view s) {
    std::vector<char32_t> cps = decode_utf8(s);

    std::vector<char32_t> composed;
    composed.reserve(cps.size());
    for (char32_t cp : cps) {
        if (!composed.empty() && cp >= 0x300 && cp <= 0x36F) {
            if (char32_t c = compose_pair(composed.back(), cp)) {
                composed.back() = c;
                continue;
            }
        }
        composed.push_back(cp);
    }

    std::vector<char32_t> out;
    out.reserve(composed.size());
    bool pending_space = false;
    for (char32_t cp : composed) {
        if (is_space_cp(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return encode_utf8(out);
}

}  // namespace reident
