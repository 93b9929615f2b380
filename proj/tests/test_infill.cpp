#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "reident/infill.hpp"
#include "reident/io.hpp"

#include "support/scripted_backend.hpp"

using namespace reident;
using testsupport::ScriptedLlmBackend;

namespace {

Chunk passage(const std::string& text, std::size_t index = 0) {
    Chunk c;
    c.chunk_id = "bg:" + std::to_string(index);
    c.source_doc_id = "bg";
    c.start = 0;
    c.end = cp_length(text);
    c.text = text;
    return c;
}

LocalContext infill_context(const std::string& text) {
    LocalContext ctx;
    ctx.span_id = "s1";
    ctx.text = text;
    ctx.window = 1000;
    ctx.mode = RenderMode::Infill;
    return ctx;
}

std::string golden(const std::string& name) {
    return read_text_file(std::string(REIDENT_TEST_DATA_DIR) + "/prompts/" + name);
}

}  // namespace

TEST_CASE("prompt with no passages matches the golden file", "[infill]") {
    const std::string prompt =
        build_prompt({}, infill_context("Her name is [MASK] and she sailed east."));
    REQUIRE(prompt == golden("golden_0.txt"));
}

TEST_CASE("prompt with one passage matches the golden file", "[infill]") {
    const std::string prompt =
        build_prompt({passage("Anna was born in Vienna in 1901.")},
                     infill_context("Born in [MASK], she wrote many letters."));
    REQUIRE(prompt == golden("golden_1.txt"));
}

TEST_CASE("prompt with ten passages matches the golden file", "[infill]") {
    std::vector<Chunk> chunks;
    for (int n = 1; n <= 10; ++n) {
        chunks.push_back(passage("Passage number " + std::to_string(n) +
                                     " about the harbor.",
                                 static_cast<std::size_t>(n)));
    }
    const std::string prompt =
        build_prompt(chunks, infill_context("He lived at [MASK] for seven years."));
    REQUIRE(prompt == golden("golden_10.txt"));
}

TEST_CASE("template is applied once, never re-substituted", "[infill]") {
    const std::string prompt =
        build_prompt({passage("literal {text} and {retrieved} and [MASK] inside")},
                     infill_context("before [MASK] after"));
    REQUIRE(prompt.find("literal {text} and {retrieved} and [MASK] inside") !=
            std::string::npos);
    // the passage's stray marker survives verbatim alongside the target's
    REQUIRE(detail::count_occurrences(prompt, "[MASK]") >= 3);
}

TEST_CASE("context must contain exactly one mask", "[infill]") {
    REQUIRE_THROWS_AS(build_prompt({}, infill_context("no marker at all")),
                      ValidationError);
    REQUIRE_THROWS_AS(build_prompt({}, infill_context("[MASK] and [MASK]")),
                      ValidationError);
}

TEST_CASE("parse_response extracts values from varied completions", "[infill]") {
    REQUIRE(parse_response(R"({"re-identification": "John Smith"})") == "John Smith");
    REQUIRE(parse_response("thinking... done. {\"re-identification\": \"1999\"}") ==
            "1999");
    REQUIRE(parse_response("{\"other\": 1} {\"re-identification\": \"second\"}") ==
            "second");
    REQUIRE(parse_response(R"({"outer": {"re-identification": "no"}, )"
                           R"("re-identification": "yes"})") == "yes");
    REQUIRE(parse_response(R"({"re-identification": "  padded  "})") == "padded");
    REQUIRE(parse_response(R"({"re-identification": "brace } in string"})") ==
            "brace } in string");
    REQUIRE(parse_response(R"({"re-identification": "esc \" quote"})") ==
            "esc \" quote");
    REQUIRE(parse_response(R"({"re-identification": 1999})") == "1999");
    REQUIRE(parse_response(R"({"re-identification": true})") == "true");
}

TEST_CASE("parse_response skips unusable objects but keeps scanning", "[infill]") {
    REQUIRE(parse_response(R"({"re-identification": null} )"
                           R"({"re-identification": "later"})") == "later");
    REQUIRE(parse_response(R"({"re-identification": ["a"]} )"
                           R"({"re-identification": "b"})") == "b");
}

TEST_CASE("parse_response failure carries the raw completion", "[infill]") {
    const std::string raw = "no json here { broken";
    try {
        parse_response(raw);
        FAIL("expected ParseFailure");
    } catch (const ParseFailure& e) {
        REQUIRE(e.raw() == raw);
    }
    REQUIRE_THROWS_AS(parse_response(R"({"wrong-key": "x"})"), ParseFailure);
    REQUIRE_THROWS_AS(parse_response(""), ParseFailure);
}

TEST_CASE("candidate probability is the token product", "[infill]") {
    CandidatePrediction pred;
    pred.token_probs = {1.0};
    REQUIRE(candidate_probability(pred) == 1.0);
    pred.token_probs = {0.5, 0.5};
    REQUIRE_THAT(candidate_probability(pred), Catch::Matchers::WithinRel(0.25, 1e-12));
    pred.token_probs = {0.9, 0.8, 0.7};
    REQUIRE_THAT(candidate_probability(pred), Catch::Matchers::WithinRel(0.504, 1e-12));
    pred.token_probs = {};
    REQUIRE_THROWS_AS(candidate_probability(pred), ValidationError);
    pred.token_probs = {0.5, 1.5};
    REQUIRE_THROWS_AS(candidate_probability(pred), ValidationError);
}

TEST_CASE("infill keeps only the value's token probabilities", "[infill]") {
    ScriptedLlmBackend backend;
    backend.enqueue([](const std::string&) {
        CompletionResult r;
        auto push = [&](const std::string& tok, double p) {
            r.tokens.push_back(tok);
            r.token_logprobs.push_back(std::log(p));
            r.text += tok;
        };
        push("{\"re-identification\": \"", 1.0);
        push("John", 0.9);
        push(" ", 0.95);
        push("Smith", 0.8);
        push("\"}", 1.0);
        return r;
    });
    const CandidatePrediction pred =
        infill_span(backend, {}, infill_context("name: [MASK]"), "s1");
    REQUIRE(pred.value == "John Smith");
    REQUIRE(pred.token_probs.size() == 3);
    REQUIRE_THAT(pred.token_probs[0], Catch::Matchers::WithinRel(0.9, 1e-12));
    REQUIRE_THAT(pred.token_probs[1], Catch::Matchers::WithinRel(0.95, 1e-12));
    REQUIRE_THAT(pred.token_probs[2], Catch::Matchers::WithinRel(0.8, 1e-12));
    REQUIRE(pred.retry_count == 0);
    REQUIRE_FALSE(pred.refusal);
    REQUIRE(pred.span_id == "s1");
    REQUIRE(pred.raw_response == "{\"re-identification\": \"John Smith\"}");
}

TEST_CASE("prompt hash is the fnv1a of the prompt bytes", "[infill]") {
    ScriptedLlmBackend backend;
    backend.enqueue_answer("x", {0.9});
    const LocalContext ctx = infill_context("id [MASK] here");
    const CandidatePrediction pred = infill_span(backend, {}, ctx, "s1");
    REQUIRE(pred.prompt_hash == to_hex(fnv1a64(build_prompt({}, ctx))));
    REQUIRE(pred.prompt_hash.size() == 16);
}

TEST_CASE("transport errors are retried then surfaced", "[infill]") {
    ScriptedLlmBackend backend;
    backend.enqueue_error("down");
    backend.enqueue_error("still down");
    backend.enqueue_answer("Dornbach", {0.8});
    const CandidatePrediction pred =
        infill_span(backend, {}, infill_context("lived in [MASK]"), "s1");
    REQUIRE(pred.value == "Dornbach");
    REQUIRE(pred.retry_count == 2);
    REQUIRE(backend.prompts.size() == 3);

    ScriptedLlmBackend dead;
    dead.enqueue_error("a");
    dead.enqueue_error("b");
    dead.enqueue_error("c");
    REQUIRE_THROWS_AS(infill_span(dead, {}, infill_context("x [MASK]"), "s1"),
                      BackendError);
    REQUIRE(dead.prompts.size() == 3);
}

TEST_CASE("unparseable completions are retried like transport errors", "[infill]") {
    ScriptedLlmBackend backend;
    backend.enqueue_text("garbage with no json");
    backend.enqueue_answer("1999", {0.9});
    const CandidatePrediction pred =
        infill_span(backend, {}, infill_context("year [MASK]"), "s1");
    REQUIRE(pred.value == "1999");
    REQUIRE(pred.retry_count == 1);

    ScriptedLlmBackend hopeless;
    hopeless.enqueue_text("junk");
    hopeless.enqueue_text("junk");
    hopeless.enqueue_text("junk");
    RetryPolicy policy;
    policy.max_attempts = 3;
    REQUIRE_THROWS_AS(
        infill_span(hopeless, {}, infill_context("y [MASK]"), "s1", policy),
        ParseFailure);
    REQUIRE(hopeless.prompts.size() == 3);
}

TEST_CASE("retry budget of one means no second attempt", "[infill]") {
    ScriptedLlmBackend backend;
    backend.enqueue_error("down");
    backend.enqueue_answer("never used", {0.9});
    RetryPolicy policy;
    policy.max_attempts = 1;
    REQUIRE_THROWS_AS(infill_span(backend, {}, infill_context("[MASK]"), "s1", policy),
                      BackendError);
    REQUIRE(backend.prompts.size() == 1);
}

TEST_CASE("an empty answer is a refusal, not an error", "[infill]") {
    ScriptedLlmBackend backend;
    backend.enqueue_answer("", {});
    const CandidatePrediction pred =
        infill_span(backend, {}, infill_context("who [MASK]"), "s1");
    REQUIRE(pred.refusal);
    REQUIRE(pred.value.empty());
    REQUIRE(pred.retry_count == 0);
    REQUIRE(backend.prompts.size() == 1);
}
