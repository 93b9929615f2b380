#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reident/metrics.hpp"

using namespace reident;

namespace {

DeidDocument eval_doc(const std::string& doc_id,
                      const std::vector<std::pair<std::string, IdClass>>& spans,
                      const std::vector<std::string>& golds) {
    DeidDocument doc;
    doc.doc_id = doc_id;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        MaskedSpan s;
        s.span_id = spans[i].first;
        s.id_class = spans[i].second;
        if (i < golds.size() && !golds[i].empty()) {
            s.gold_value = golds[i];
        }
        doc.spans.push_back(std::move(s));
    }
    return doc;
}

using PredMap = std::map<std::pair<std::string, std::string>, std::string>;

}  // namespace

TEST_CASE("exact match compares canonical forms", "[metrics]") {
    REQUIRE(exact_match("Maria Keller", "Maria Keller"));
    REQUIRE(exact_match("  Maria \t Keller ", "Maria Keller"));
    REQUIRE(exact_match("Ségur", "Ségur"));
    REQUIRE_FALSE(exact_match("maria keller", "Maria Keller"));
    REQUIRE_FALSE(exact_match("Maria", "Maria Keller"));
    REQUIRE(exact_match("", ""));
}

TEST_CASE("word recall divides hits by prediction tokens", "[metrics]") {
    REQUIRE(word_recall("John Smith", "John Smith") == 1.0);
    // extra predicted token halves the rate
    REQUIRE(word_recall("John Smith", "John") == 0.5);
    // a short but correct prediction still scores 1
    REQUIRE(word_recall("John", "John Smith") == 1.0);
    REQUIRE(word_recall("Brown", "John Smith") == 0.0);
    // tokenization lowercases, so recall is case-insensitive
    REQUIRE(word_recall("JOHN", "john") == 1.0);
}

TEST_CASE("word recall uses multiset budgets", "[metrics]") {
    // gold has one "john"; the second predicted "john" finds the budget spent
    REQUIRE(word_recall("john john", "john") == 0.5);
    REQUIRE(word_recall("john john", "john john") == 1.0);
    REQUIRE(word_recall("john", "john john") == 1.0);
}

TEST_CASE("predictions without word tokens score zero recall", "[metrics]") {
    REQUIRE(word_recall("", "John") == 0.0);
    REQUIRE(word_recall("?!...", "John") == 0.0);
    REQUIRE(word_recall("", "") == 0.0);
}

TEST_CASE("exact matches with word-bearing golds imply full recall", "[metrics]") {
    const std::vector<std::string> values = {
        "Maria Keller", "Dornbach", "water board 1999", "a b a b", "J. R. Smith"};
    for (const auto& v : values) {
        REQUIRE(exact_match(v, v));
        REQUIRE(word_recall(v, v) == 1.0);
    }
}

TEST_CASE("micro evaluation pools spans per class", "[metrics]") {
    const std::vector<DeidDocument> docs = {
        eval_doc("d1", {{"a", IdClass::Direct}, {"b", IdClass::Quasi}},
                 {"Maria Keller", "Dornbach"}),
        eval_doc("d2", {{"c", IdClass::Direct}, {"d", IdClass::Quasi}},
                 {"Anna Gruber", "Vienna"}),
    };
    const PredMap preds = {
        {{"d1", "a"}, "Maria Keller"},  // exact
        {{"d1", "b"}, "Dornbach East"}, // recall 0.5
        {{"d2", "c"}, "Gruber"},        // recall 1.0, not exact
        {{"d2", "d"}, "Vienna"},        // exact
    };
    const EvalReport report = evaluate(docs, preds);

    REQUIRE(report.direct.n_spans == 2);
    REQUIRE(report.direct.n_exact == 1);
    REQUIRE(report.direct.exact_match == 0.5);
    REQUIRE(report.direct.word_recall == 1.0);

    REQUIRE(report.quasi.n_spans == 2);
    REQUIRE(report.quasi.n_exact == 1);
    REQUIRE(report.quasi.exact_match == 0.5);
    REQUIRE(report.quasi.word_recall == 0.75);

    REQUIRE(report.all.n_spans == 4);
    REQUIRE(report.all.n_exact == 2);
    REQUIRE(report.all.exact_match == 0.5);
    REQUIRE(report.all.word_recall == 0.875);

    REQUIRE(report.spans.size() == 4);
    REQUIRE(report.missing_gold.empty());
    REQUIRE(report.missing_prediction.empty());
}

TEST_CASE("spans without predictions or golds are reported, not scored",
          "[metrics]") {
    std::vector<DeidDocument> docs = {
        eval_doc("d1", {{"a", IdClass::Direct}, {"b", IdClass::Direct}},
                 {"Maria Keller", ""}),
    };
    // span b has a prediction but no gold; span a has a gold but no
    // prediction
    const PredMap preds = {{{"d1", "b"}, "whatever"}};
    const EvalReport report = evaluate(docs, preds);
    REQUIRE(report.direct.n_spans == 0);
    REQUIRE(report.all.n_spans == 0);
    REQUIRE(report.all.exact_match == 0.0);
    REQUIRE(report.spans.empty());
    REQUIRE(report.missing_gold == std::vector<std::string>{"d1/b"});
    REQUIRE(report.missing_prediction == std::vector<std::string>{"d1/a"});
}

TEST_CASE("macro averaging weights documents, not spans", "[metrics]") {
    // d1 carries two exact direct spans, d2 one wrong direct span:
    // micro 2/3, macro (1.0 + 0.0) / 2
    const std::vector<DeidDocument> docs = {
        eval_doc("d1", {{"a", IdClass::Direct}, {"b", IdClass::Direct}},
                 {"x y", "z"}),
        eval_doc("d2", {{"c", IdClass::Direct}}, {"w"}),
    };
    const PredMap preds = {
        {{"d1", "a"}, "x y"},
        {{"d1", "b"}, "z"},
        {{"d2", "c"}, "nope"},
    };
    const EvalReport micro = evaluate(docs, preds, Averaging::Micro);
    REQUIRE_THAT(micro.direct.exact_match,
                 Catch::Matchers::WithinRel(2.0 / 3.0, 1e-12));
    const EvalReport macro = evaluate(docs, preds, Averaging::Macro);
    REQUIRE(macro.direct.exact_match == 0.5);
    REQUIRE(macro.direct.n_spans == 3);
    REQUIRE(macro.direct.n_exact == 2);
}

TEST_CASE("macro all pools classes within a document first", "[metrics]") {
    // d1: direct exact + quasi wrong (doc rate 0.5); d2: quasi exact (1.0)
    const std::vector<DeidDocument> docs = {
        eval_doc("d1", {{"a", IdClass::Direct}, {"b", IdClass::Quasi}},
                 {"x", "y"}),
        eval_doc("d2", {{"c", IdClass::Quasi}}, {"z"}),
    };
    const PredMap preds = {
        {{"d1", "a"}, "x"},
        {{"d1", "b"}, "nope"},
        {{"d2", "c"}, "z"},
    };
    const EvalReport macro = evaluate(docs, preds, Averaging::Macro);
    REQUIRE(macro.direct.exact_match == 1.0);
    REQUIRE(macro.quasi.exact_match == 0.5);
    REQUIRE(macro.all.exact_match == 0.75);
    // a document with no scored spans in a class does not drag the average
    const EvalReport micro = evaluate(docs, preds, Averaging::Micro);
    REQUIRE(micro.all.n_exact == macro.all.n_exact);
}

TEST_CASE("evaluation with no documents yields empty stats", "[metrics]") {
    const EvalReport report = evaluate({}, {});
    REQUIRE(report.all.n_spans == 0);
    REQUIRE(report.all.exact_match == 0.0);
    REQUIRE(report.all.word_recall == 0.0);
}

TEST_CASE("reports serialize to json and csv", "[metrics]") {
    const std::vector<DeidDocument> docs = {
        eval_doc("d1", {{"a", IdClass::Direct}, {"b", IdClass::Quasi}},
                 {"Maria Keller", "Dornbach"}),
    };
    const PredMap preds = {
        {{"d1", "a"}, "Maria Keller"},
        {{"d1", "b"}, "Linz"},
    };
    const EvalReport report = evaluate(docs, preds);

    const nlohmann::json j = report_to_json(report);
    REQUIRE(j.at("classes").at("direct").at("n_spans") == 1);
    REQUIRE(j.at("classes").at("direct").at("exact_match") == 1.0);
    REQUIRE(j.at("classes").at("quasi").at("exact_match") == 0.0);
    REQUIRE(j.at("classes").at("all").at("n_exact") == 1);
    REQUIRE(j.at("spans").size() == 2);
    REQUIRE(j.at("spans")[0].at("doc_id") == "d1");
    REQUIRE(j.at("spans")[0].at("id_class") == "direct");
    REQUIRE(j.at("spans")[0].at("exact") == true);
    REQUIRE(j.at("missing_gold").is_array());

    const std::string csv = report_to_csv(report);
    REQUIRE(csv.rfind("class,n_spans,n_exact,exact_match,word_recall\n", 0) == 0);
    REQUIRE(csv.find("\ndirect,1,1,") != std::string::npos);
    REQUIRE(csv.find("\nquasi,1,0,") != std::string::npos);
    REQUIRE(csv.find("\nall,2,1,") != std::string::npos);
}
