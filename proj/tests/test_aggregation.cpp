#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "reident/aggregation.hpp"

#include "support/fixtures.hpp"

using namespace reident;

namespace {

struct StepSpec {
    std::string span_id;
    std::string value;
    double probability = 0.0;
    bool refusal = false;
};

ReidentRun make_run(const std::vector<std::string>& span_ids,
                    const std::vector<StepSpec>& steps) {
    ReidentRun run;
    run.doc_id = "d";
    for (const auto& id : span_ids) {
        MaskedSpan s;
        s.span_id = id;
        run.final_document.spans.push_back(std::move(s));
    }
    for (const auto& spec : steps) {
        RunStep step;
        step.span_id = spec.span_id;
        step.prediction.span_id = spec.span_id;
        step.prediction.value = spec.value;
        step.prediction.refusal = spec.refusal;
        step.probability = spec.probability;
        run.steps.push_back(std::move(step));
    }
    return run;
}

}  // namespace

TEST_CASE("votes sum per value and the largest total wins", "[aggregation]") {
    const AggregatedSpanResult r = aggregate_span(
        {{"Smith", 0.3}, {"Smith", 0.4}, {"Jones", 0.6}});
    REQUIRE(r.chosen_value == "Smith");
    REQUIRE_THAT(r.score, Catch::Matchers::WithinRel(0.7, 1e-12));
    REQUIRE(r.candidate_scores.size() == 2);
    REQUIRE_THAT(r.candidate_scores.at("Jones"), Catch::Matchers::WithinRel(0.6, 1e-12));
    REQUIRE(r.supporting_runs == std::vector<std::size_t>{0, 1});
}

TEST_CASE("a single candidate wins outright", "[aggregation]") {
    const AggregatedSpanResult r = aggregate_span({{"A", 0.9}});
    REQUIRE(r.chosen_value == "A");
    REQUIRE(r.score == 0.9);
    REQUIRE(r.supporting_runs == std::vector<std::size_t>{0});
}

TEST_CASE("many weak votes beat one strong vote", "[aggregation]") {
    const AggregatedSpanResult r =
        aggregate_span({{"A", 0.9}, {"B", 0.5}, {"B", 0.5}});
    REQUIRE(r.chosen_value == "B");
    REQUIRE(r.score == 1.0);
    REQUIRE(r.supporting_runs == std::vector<std::size_t>{1, 2});
}

TEST_CASE("total ties break on the best single probability", "[aggregation]") {
    // totals tie at 0.5; "a" has the stronger single vote even though "B"
    // sorts first
    const AggregatedSpanResult r =
        aggregate_span({{"a", 0.5}, {"B", 0.3}, {"B", 0.2}});
    REQUIRE(r.chosen_value == "a");
    REQUIRE(r.supporting_runs == std::vector<std::size_t>{0});
}

TEST_CASE("full ties break lexicographically", "[aggregation]") {
    const AggregatedSpanResult r = aggregate_span({{"b", 0.5}, {"a", 0.5}});
    REQUIRE(r.chosen_value == "a");
    REQUIRE(r.supporting_runs == std::vector<std::size_t>{1});
}

TEST_CASE("values merge under canonicalization", "[aggregation]") {
    const AggregatedSpanResult r = aggregate_span(
        {{"  John \t Smith ", 0.4}, {"John Smith", 0.3}, {"Jones", 0.6}});
    REQUIRE(r.chosen_value == "John Smith");
    REQUIRE_THAT(r.score, Catch::Matchers::WithinRel(0.7, 1e-12));
    REQUIRE(r.supporting_runs == std::vector<std::size_t>{0, 1});

    // combining marks compose before comparison
    const AggregatedSpanResult c = aggregate_span(
        {{"Ségur", 0.4}, {"Ségur", 0.4}, {"Paris", 0.5}});
    REQUIRE(c.chosen_value == "Ségur");
}

TEST_CASE("canonicalization is case sensitive", "[aggregation]") {
    const AggregatedSpanResult r =
        aggregate_span({{"smith", 0.4}, {"Smith", 0.3}, {"smith", 0.1}});
    REQUIRE(r.chosen_value == "smith");
    REQUIRE_THAT(r.score, Catch::Matchers::WithinRel(0.5, 1e-12));
    REQUIRE(r.candidate_scores.count("Smith") == 1);
}

TEST_CASE("aggregation is invariant to candidate order", "[aggregation]") {
    // dyadic probabilities so the sums are exact under any addition order
    std::vector<std::pair<std::string, double>> candidates = {
        {"alpha", 13.0 / 64.0}, {"beta", 21.0 / 64.0}, {"alpha", 9.0 / 64.0},
        {"gamma", 30.0 / 64.0}, {"beta", 2.0 / 64.0},  {"alpha", 16.0 / 64.0},
    };
    const AggregatedSpanResult base = aggregate_span(candidates);
    REQUIRE(base.chosen_value == "alpha");

    std::sort(candidates.begin(), candidates.end());
    do {
        const AggregatedSpanResult r = aggregate_span(candidates);
        REQUIRE(r.chosen_value == base.chosen_value);
        REQUIRE(r.score == base.score);
        REQUIRE(r.candidate_scores == base.candidate_scores);
    } while (std::next_permutation(candidates.begin(), candidates.end()));
}

TEST_CASE("duplicated candidates count twice", "[aggregation]") {
    const AggregatedSpanResult once = aggregate_span({{"A", 0.25}, {"B", 0.4}});
    REQUIRE(once.chosen_value == "B");
    const AggregatedSpanResult twice =
        aggregate_span({{"A", 0.25}, {"A", 0.25}, {"B", 0.4}});
    REQUIRE(twice.chosen_value == "A");
    REQUIRE(twice.score == 0.5);
}

TEST_CASE("aggregate_span rejects bad input", "[aggregation]") {
    REQUIRE_THROWS_AS(aggregate_span({}), ValidationError);
    REQUIRE_THROWS_AS(aggregate_span({{"A", 1.5}}), ValidationError);
    REQUIRE_THROWS_AS(aggregate_span({{"A", -0.1}}), ValidationError);
}

TEST_CASE("bundles aggregate per span across runs", "[aggregation]") {
    RunBundle bundle;
    bundle.doc_id = "d";
    const std::vector<std::string> ids = {"s1", "s2", "s3"};
    bundle.runs.push_back(make_run(ids, {{"s1", "Smith", 0.3},
                                         {"s2", "", 0.0, true},
                                         {"s3", "", 0.0, true}}));
    bundle.runs.push_back(make_run(ids, {{"s3", "Y", 0.5},
                                         {"s2", "", 0.0, true},
                                         {"s1", "Smith", 0.4}}));
    bundle.runs.push_back(make_run(ids, {{"s1", "Jones", 0.6},
                                         {"s2", "", 0.0, true},
                                         {"s3", "Y", 0.4}}));

    const std::vector<AggregatedSpanResult> spans = aggregate_bundle(bundle);
    REQUIRE(spans.size() == 3);

    REQUIRE(spans[0].span_id == "s1");
    REQUIRE(spans[0].chosen_value == "Smith");
    REQUIRE_THAT(spans[0].score, Catch::Matchers::WithinRel(0.7, 1e-12));
    REQUIRE(spans[0].supporting_runs == std::vector<std::size_t>{0, 1});

    // nobody answered s2
    REQUIRE(spans[1].span_id == "s2");
    REQUIRE(spans[1].chosen_value.empty());
    REQUIRE(spans[1].score == 0.0);
    REQUIRE(spans[1].supporting_runs.empty());

    // refusing run 0 skips s3, so supporters map to runs 1 and 2
    REQUIRE(spans[2].span_id == "s3");
    REQUIRE(spans[2].chosen_value == "Y");
    REQUIRE_THAT(spans[2].score, Catch::Matchers::WithinRel(0.9, 1e-12));
    REQUIRE(spans[2].supporting_runs == std::vector<std::size_t>{1, 2});
}

TEST_CASE("empty-string predictions are treated as null", "[aggregation]") {
    RunBundle bundle;
    bundle.doc_id = "d";
    bundle.runs.push_back(make_run({"s1"}, {{"s1", "", 0.8, false}}));
    bundle.runs.push_back(make_run({"s1"}, {{"s1", "X", 0.2, false}}));
    const auto spans = aggregate_bundle(bundle);
    REQUIRE(spans[0].chosen_value == "X");
    REQUIRE(spans[0].supporting_runs == std::vector<std::size_t>{1});
}

TEST_CASE("bundles without runs or with mismatched spans are rejected",
          "[aggregation]") {
    RunBundle empty;
    empty.doc_id = "d";
    REQUIRE_THROWS_AS(aggregate_bundle(empty), ValidationError);

    RunBundle mismatched;
    mismatched.doc_id = "d";
    mismatched.runs.push_back(make_run({"s1"}, {{"s1", "A", 0.5}}));
    mismatched.runs.push_back(make_run({"s1", "s2"}, {{"s1", "A", 0.5}}));
    REQUIRE_THROWS_AS(aggregate_bundle(mismatched), ValidationError);
}

TEST_CASE("span order within a run does not matter", "[aggregation]") {
    RunBundle bundle;
    bundle.doc_id = "d";
    // second run's document lists spans in reverse; the first run's order
    // is authoritative for output
    bundle.runs.push_back(make_run({"s1", "s2"}, {{"s1", "A", 0.5}, {"s2", "B", 0.5}}));
    bundle.runs.push_back(make_run({"s2", "s1"}, {{"s2", "B", 0.5}, {"s1", "A", 0.5}}));
    const auto spans = aggregate_bundle(bundle);
    REQUIRE(spans[0].span_id == "s1");
    REQUIRE(spans[0].score == 1.0);
    REQUIRE(spans[1].span_id == "s2");
    REQUIRE(spans[1].score == 1.0);
}

TEST_CASE("aggregated results round trip through disk", "[aggregation]") {
    AggregatedDocument doc;
    doc.doc_id = "d9";
    AggregatedSpanResult s;
    s.span_id = "s1";
    s.chosen_value = "Maria Keller";
    s.score = 1.25;
    s.candidate_scores = {{"Maria Keller", 1.25}, {"other", 0.5}};
    s.supporting_runs = {0, 3};
    doc.spans.push_back(s);

    testsupport::TempDir dir;
    const auto path = dir.file("agg.json");
    save_aggregated({doc}, path);
    const std::vector<AggregatedDocument> loaded = load_aggregated(path);
    REQUIRE(loaded.size() == 1);
    REQUIRE(loaded[0].doc_id == "d9");
    REQUIRE(loaded[0].spans[0].chosen_value == "Maria Keller");
    REQUIRE(loaded[0].spans[0].score == 1.25);
    REQUIRE(loaded[0].spans[0].candidate_scores.at("other") == 0.5);
    REQUIRE(loaded[0].spans[0].supporting_runs == std::vector<std::size_t>{0, 3});

    const auto again = dir.file("agg2.json");
    save_aggregated(loaded, again);
    REQUIRE(read_text_file(path) == read_text_file(again));
}

TEST_CASE("malformed aggregated files are reported", "[aggregation]") {
    testsupport::TempDir dir;
    const auto path = dir.file("bad.json");
    write_text_file(path, "{\n  \"documents\": [\n");
    REQUIRE_THROWS_AS(load_aggregated(path), ParseError);
    write_text_file(path, "{\"docs\": []}");
    REQUIRE_THROWS_AS(load_aggregated(path), ValidationError);
}
