#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "reident/errors.hpp"
#include "reident/io.hpp"
#include "reident/orchestrator.hpp"
#include "reident/unicode.hpp"

namespace reident {

struct AggregatedSpanResult {
    std::string span_id;
    std::string chosen_value;  // canonical form
    double score = 0.0;
    std::map<std::string, double> candidate_scores;  // canonical value -> total
    std::vector<std::size_t> supporting_runs;        // indices of runs voting for the winner
};

/// Weighted vote across candidates for one span: sum probabilities per
/// canonicalized value and pick the largest total. Ties break toward the
/// value with the larger best single-run probability, then toward the
/// lexicographically smaller value.
inline AggregatedSpanResult aggregate_span(
    const std::vector<std::pair<std::string, double>>& candidates) {
    if (candidates.empty()) {
        throw ValidationError("aggregate_span needs at least one candidate");
    }
    AggregatedSpanResult result;
    std::map<std::string, double> best_single;
    std::map<std::string, std::vector<std::size_t>> voters;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& [value, p] = candidates[i];
        if (p < 0.0 || p > 1.0) {
            throw ValidationError("candidate probability outside [0,1]");
        }
        const std::string c = canonical_value(value);
        result.candidate_scores[c] += p;
        auto it = best_single.find(c);
        if (it == best_single.end() || p > it->second) {
            best_single[c] = p;
        }
        voters[c].push_back(i);
    }

    bool first = true;
    for (const auto& [value, total] : result.candidate_scores) {
        if (first) {
            result.chosen_value = value;
            result.score = total;
            first = false;
            continue;
        }
        // candidate_scores iterates in lexicographic order, so on full ties
        // the earlier (smaller) value is kept
        if (total > result.score ||
            (total == result.score && best_single[value] > best_single[result.chosen_value])) {
            result.chosen_value = value;
            result.score = total;
        }
    }
    result.supporting_runs = voters[result.chosen_value];
    return result;
}

/// Per-span aggregation across a bundle's runs. Null predictions (refusals
/// restored as the empty string with probability 0) are dropped before
/// voting; a span nobody answered aggregates to the empty value with
/// score 0.
inline std::vector<AggregatedSpanResult> aggregate_bundle(const RunBundle& bundle) {
    if (bundle.runs.empty()) {
        throw ValidationError("bundle for doc " + bundle.doc_id + " has no runs");
    }

    // all runs must agree on the span set; take display order from the
    // first run's document
    std::vector<std::string> span_ids;
    for (const auto& s : bundle.runs[0].final_document.spans) {
        span_ids.push_back(s.span_id);
    }
    for (const auto& run : bundle.runs) {
        std::vector<std::string> ids;
        for (const auto& s : run.final_document.spans) {
            ids.push_back(s.span_id);
        }
        std::vector<std::string> a = span_ids;
        std::vector<std::string> b = ids;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) {
            throw ValidationError("runs for doc " + bundle.doc_id +
                                  " disagree on the span set");
        }
    }

    std::vector<AggregatedSpanResult> results;
    for (const auto& span_id : span_ids) {
        std::vector<std::pair<std::string, double>> candidates;
        std::vector<std::size_t> run_of_candidate;
        for (std::size_t r = 0; r < bundle.runs.size(); ++r) {
            for (const auto& step : bundle.runs[r].steps) {
                if (step.span_id != span_id) {
                    continue;
                }
                if (step.prediction.refusal || step.prediction.value.empty()) {
                    break;  // null prediction contributes nothing
                }
                candidates.emplace_back(step.prediction.value, step.probability);
                run_of_candidate.push_back(r);
                break;
            }
        }
        if (candidates.empty()) {
            AggregatedSpanResult empty;
            empty.span_id = span_id;
            results.push_back(std::move(empty));
            continue;
        }
        AggregatedSpanResult agg = aggregate_span(candidates);
        agg.span_id = span_id;
        for (auto& idx : agg.supporting_runs) {
            idx = run_of_candidate[idx];
        }
        results.push_back(std::move(agg));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

struct AggregatedDocument {
    std::string doc_id;
    std::vector<AggregatedSpanResult> spans;
};

inline nlohmann::json aggregated_to_json(const std::vector<AggregatedDocument>& docs) {
    nlohmann::json out_docs = nlohmann::json::array();
    for (const auto& doc : docs) {
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& s : doc.spans) {
            spans.push_back({
                {"span_id", s.span_id},
                {"chosen_value", s.chosen_value},
                {"score", s.score},
                {"candidate_scores", s.candidate_scores},
                {"supporting_runs", s.supporting_runs},
            });
        }
        out_docs.push_back({{"doc_id", doc.doc_id}, {"spans", std::move(spans)}});
    }
    return nlohmann::json{{"documents", std::move(out_docs)}};
}

inline std::vector<AggregatedDocument> aggregated_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("documents")) {
        throw ValidationError("expected an object with a \"documents\" array");
    }
    std::vector<AggregatedDocument> docs;
    for (const auto& jd : j.at("documents")) {
        AggregatedDocument doc;
        doc.doc_id = jd.at("doc_id").get<std::string>();
        for (const auto& js : jd.at("spans")) {
            AggregatedSpanResult s;
            s.span_id = js.at("span_id").get<std::string>();
            s.chosen_value = js.at("chosen_value").get<std::string>();
            s.score = js.at("score").get<double>();
            s.candidate_scores =
                js.at("candidate_scores").get<std::map<std::string, double>>();
            s.supporting_runs = js.at("supporting_runs").get<std::vector<std::size_t>>();
            doc.spans.push_back(std::move(s));
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

inline void save_aggregated(const std::vector<AggregatedDocument>& docs,
                            const std::filesystem::path& path) {
    write_text_file(path, aggregated_to_json(docs).dump(2) + "\n");
}

inline std::vector<AggregatedDocument> load_aggregated(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), line_of_byte(content, e.byte), e.what());
    }
    return aggregated_from_json(j);
}

}  // namespace reident
