#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "reident/hashing.hpp"
#include "reident/unicode.hpp"

namespace testsupport {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("reident_test_" + std::to_string(++counter) + "_" +
                 std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Random text over a small alphabet including multibyte letters and
/// varied whitespace, for property tests.
inline std::string random_text(reident::SplitMix64& rng, std::size_t n_cps) {
    static const std::vector<char32_t> alphabet = {
        U'a', U'b', U'c', U'd', U'e', U' ', U' ', U'\n', U'.', U',',
        0x00E9,  // é
        0x00DF,  // ß
        0x0416,  // Ж
        0x4E2D,  // a CJK ideograph
    };
    std::string out;
    for (std::size_t i = 0; i < n_cps; ++i) {
        reident::append_utf8(out, alphabet[rng.next_below(alphabet.size())]);
    }
    return out;
}

inline std::string random_word(reident::SplitMix64& rng, std::size_t len) {
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(static_cast<char>('a' + rng.next_below(26)));
    }
    return out;
}

}  // namespace testsupport
