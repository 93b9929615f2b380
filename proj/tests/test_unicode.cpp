#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "reident/unicode.hpp"

using namespace reident;

TEST_CASE("decode and encode round-trip", "[unicode]") {
    const std::string samples[] = {
        "",
        "plain ascii",
        "caf\xC3\xA9",              // café
        "\xD0\x96\xD0\xB8",         // Жи
        "\xE4\xB8\xAD\xE6\x96\x87", // 中文
        "\xF0\x9F\x99\x82",         // U+1F642
    };
    for (const auto& s : samples) {
        CHECK(encode_utf8(decode_utf8(s)) == s);
    }
}

TEST_CASE("invalid sequences decode to replacement character", "[unicode]") {
    std::size_t i = 0;
    std::string stray = "\x80";
    CHECK(decode_cp(stray, i) == 0xFFFD);
    CHECK(i == 1);

    i = 0;
    std::string truncated = "\xC3";  // lead byte with no continuation
    CHECK(decode_cp(truncated, i) == 0xFFFD);

    i = 0;
    std::string bad_cont = "\xE2\x28\xA1";  // continuation byte wrong
    CHECK(decode_cp(bad_cont, i) == 0xFFFD);
    CHECK(i == 1);  // resynchronizes one byte at a time

    i = 0;
    std::string surrogate = "\xED\xA0\x80";  // U+D800
    CHECK(decode_cp(surrogate, i) == 0xFFFD);
}

TEST_CASE("code point lengths and offsets", "[unicode]") {
    const std::string s = "a\xC3\xA9z";  // a é z
    CHECK(cp_length(s) == 3);
    CHECK(byte_offset(s, 0) == 0);
    CHECK(byte_offset(s, 1) == 1);
    CHECK(byte_offset(s, 2) == 3);
    CHECK(byte_offset(s, 3) == 4);
    CHECK(byte_offset(s, 99) == 4);  // clamped
    CHECK(cp_slice(s, 1, 2) == "\xC3\xA9");
    CHECK(cp_slice(s, 0, 3) == s);
    CHECK(cp_slice(s, 2, 2) == "");
}

TEST_CASE("whitespace classification", "[unicode]") {
    CHECK(is_space_cp(U' '));
    CHECK(is_space_cp(U'\t'));
    CHECK(is_space_cp(U'\n'));
    CHECK(is_space_cp(0x00A0));
    CHECK(is_space_cp(0x2003));  // em space
    CHECK(is_space_cp(0x3000));  // ideographic space
    CHECK_FALSE(is_space_cp(U'a'));
    CHECK_FALSE(is_space_cp(U'-'));
    CHECK_FALSE(is_space_cp(0x00E9));
}

TEST_CASE("word character classification", "[unicode]") {
    CHECK(is_word_cp(U'a'));
    CHECK(is_word_cp(U'Z'));
    CHECK(is_word_cp(U'7'));
    CHECK(is_word_cp(0x00E9));  // é
    CHECK(is_word_cp(0x0416));  // Ж
    CHECK(is_word_cp(0x03B1));  // α
    CHECK(is_word_cp(0x05D0));  // א
    CHECK(is_word_cp(0x4E2D));  // CJK
    CHECK(is_word_cp(0x0301));  // combining acute stays in-token
    CHECK_FALSE(is_word_cp(U'-'));
    CHECK_FALSE(is_word_cp(U','));
    CHECK_FALSE(is_word_cp(U' '));
    CHECK_FALSE(is_word_cp(0x00D7));  // multiplication sign
    CHECK_FALSE(is_word_cp(0x00F7));  // division sign
}

TEST_CASE("lowercase mapping", "[unicode]") {
    CHECK(to_lower_cp(U'A') == U'a');
    CHECK(to_lower_cp(U'z') == U'z');
    CHECK(to_lower_cp(0x00C9) == 0x00E9);  // É → é
    CHECK(to_lower_cp(0x00D7) == 0x00D7);  // × unchanged
    CHECK(to_lower_cp(0x0100) == 0x0101);  // Ā → ā
    CHECK(to_lower_cp(0x0139) == 0x013A);  // Ĺ → ĺ
    CHECK(to_lower_cp(0x0178) == 0x00FF);  // Ÿ → ÿ
    CHECK(to_lower_cp(0x017D) == 0x017E);  // Ž → ž
    CHECK(to_lower_cp(0x0391) == 0x03B1);  // Α → α
    CHECK(to_lower_cp(0x0386) == 0x03AC);  // Ά → ά
    CHECK(to_lower_cp(0x0410) == 0x0430);  // А → а
    CHECK(to_lower_cp(0x0416) == 0x0436);  // Ж → ж
    CHECK(to_lower_cp(0x4E2D) == 0x4E2D);  // CJK unchanged
}

TEST_CASE("combining mark composition", "[unicode]") {
    CHECK(compose_pair(U'e', 0x301) == 0x00E9);  // é
    CHECK(compose_pair(U'E', 0x301) == 0x00C9);
    CHECK(compose_pair(U'n', 0x303) == 0x00F1);  // ñ
    CHECK(compose_pair(U'c', 0x327) == 0x00E7);  // ç
    CHECK(compose_pair(U'z', 0x30C) == 0x017E);  // ž
    CHECK(compose_pair(U'q', 0x301) == 0);       // no such composition
    CHECK(compose_pair(U'e', 0x330) == 0);
}

TEST_CASE("canonical_value composes, trims, and collapses", "[unicode]") {
    // decomposed e + U+0301 becomes precomposed é
    CHECK(canonical_value("caf\x65\xCC\x81") == "caf\xC3\xA9");
    CHECK(canonical_value("  John  Smith ") == "John Smith");
    CHECK(canonical_value("John\t\nSmith") == "John Smith");
    CHECK(canonical_value("\xC2\xA0John\xC2\xA0") == "John");  // no-break spaces
    CHECK(canonical_value("JOHN") == "JOHN");  // case preserved
    CHECK(canonical_value("") == "");
    CHECK(canonical_value("   ") == "");
    CHECK(canonical_value("one two") == "one two");
}

TEST_CASE("canonical_value is idempotent", "[unicode]") {
    const std::string samples[] = {
        "  a  b ", "caf\x65\xCC\x81 au lait", "x", "", "A\xCC\x88O",
    };
    for (const auto& s : samples) {
        CHECK(canonical_value(canonical_value(s)) == canonical_value(s));
    }
}
