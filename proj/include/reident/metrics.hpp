#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "reident/corpus.hpp"
#include "reident/tokenize.hpp"
#include "reident/unicode.hpp"

namespace reident {

/// True when prediction and gold agree after canonicalization.
inline bool exact_match(const std::string& prediction, const std::string& gold) {
    return canonical_value(prediction) == canonical_value(gold);
}

/// Fraction of the prediction's word tokens that also occur in the gold
/// value, with multiset semantics: each gold token can absorb at most as
/// many prediction tokens as it occurs times. A prediction with no word
/// tokens scores 0.
inline double word_recall(const std::string& prediction, const std::string& gold) {
    const std::vector<std::string> pred = tokenize(canonical_value(prediction));
    if (pred.empty()) {
        return 0.0;
    }
    std::map<std::string, std::size_t> budget;
    for (const auto& t : tokenize(canonical_value(gold))) {
        ++budget[t];
    }
    std::size_t hits = 0;
    for (const auto& t : pred) {
        auto it = budget.find(t);
        if (it != budget.end() && it->second > 0) {
            --it->second;
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

struct SpanEvalRow {
    std::string doc_id;
    std::string span_id;
    IdClass id_class = IdClass::Direct;
    std::string prediction;
    std::string gold;
    bool exact = false;
    double recall = 0.0;
};

struct ClassStats {
    std::size_t n_spans = 0;
    std::size_t n_exact = 0;
    double exact_match = 0.0;  // mean over spans
    double word_recall = 0.0;  // mean over spans
};

struct EvalReport {
    ClassStats direct;
    ClassStats quasi;
    ClassStats all;
    std::vector<SpanEvalRow> spans;
    // spans carrying a prediction but no gold value, excluded from the rates
    std::vector<std::string> missing_gold;
    // spans carrying a gold value but no prediction
    std::vector<std::string> missing_prediction;
};

namespace detail {

inline void finalize_stats(ClassStats& stats, double recall_sum) {
    if (stats.n_spans == 0) {
        return;
    }
    stats.exact_match =
        static_cast<double>(stats.n_exact) / static_cast<double>(stats.n_spans);
    stats.word_recall = recall_sum / static_cast<double>(stats.n_spans);
}

}  // namespace detail

enum class Averaging { Micro, Macro };

namespace detail {

struct ClassAccum {
    std::size_t n_spans = 0;
    std::size_t n_exact = 0;
    double recall_sum = 0.0;
};

}  // namespace detail

/// Scores predicted span values against the gold values carried by the
/// documents. `predictions` maps (doc_id, span_id) to the predicted value;
/// spans without a prediction or without a gold value are reported but do
/// not enter the per-class rates. Micro averaging pools spans; macro
/// averages per-document rates over the documents contributing spans to
/// the class.
inline EvalReport evaluate(
    const std::vector<DeidDocument>& documents,
    const std::map<std::pair<std::string, std::string>, std::string>& predictions,
    Averaging averaging = Averaging::Micro) {
    EvalReport report;
    detail::ClassAccum totals[2];
    // per-document rate sums for macro mode, indexed by class
    double doc_exact_sum[2] = {0.0, 0.0};
    double doc_recall_sum[2] = {0.0, 0.0};
    std::size_t doc_count[2] = {0, 0};

    for (const auto& doc : documents) {
        detail::ClassAccum local[2];
        for (const auto& span : doc.spans) {
            const auto key = std::make_pair(doc.doc_id, span.span_id);
            const auto pred_it = predictions.find(key);
            const std::string label = doc.doc_id + "/" + span.span_id;
            if (pred_it == predictions.end()) {
                if (span.gold_value) {
                    report.missing_prediction.push_back(label);
                }
                continue;
            }
            if (!span.gold_value) {
                report.missing_gold.push_back(label);
                continue;
            }
            SpanEvalRow row;
            row.doc_id = doc.doc_id;
            row.span_id = span.span_id;
            row.id_class = span.id_class;
            row.prediction = pred_it->second;
            row.gold = *span.gold_value;
            row.exact = exact_match(row.prediction, row.gold);
            row.recall = word_recall(row.prediction, row.gold);

            detail::ClassAccum& acc = local[span.id_class == IdClass::Quasi ? 1 : 0];
            ++acc.n_spans;
            if (row.exact) {
                ++acc.n_exact;
            }
            acc.recall_sum += row.recall;
            report.spans.push_back(std::move(row));
        }
        for (int c = 0; c < 2; ++c) {
            if (local[c].n_spans == 0) {
                continue;
            }
            totals[c].n_spans += local[c].n_spans;
            totals[c].n_exact += local[c].n_exact;
            totals[c].recall_sum += local[c].recall_sum;
            const double n = static_cast<double>(local[c].n_spans);
            doc_exact_sum[c] += static_cast<double>(local[c].n_exact) / n;
            doc_recall_sum[c] += local[c].recall_sum / n;
            ++doc_count[c];
        }
    }

    ClassStats* stats[2] = {&report.direct, &report.quasi};
    for (int c = 0; c < 2; ++c) {
        stats[c]->n_spans = totals[c].n_spans;
        stats[c]->n_exact = totals[c].n_exact;
        if (averaging == Averaging::Micro) {
            detail::finalize_stats(*stats[c], totals[c].recall_sum);
        } else if (doc_count[c] > 0) {
            const double d = static_cast<double>(doc_count[c]);
            stats[c]->exact_match = doc_exact_sum[c] / d;
            stats[c]->word_recall = doc_recall_sum[c] / d;
        }
    }
    report.all.n_spans = report.direct.n_spans + report.quasi.n_spans;
    report.all.n_exact = report.direct.n_exact + report.quasi.n_exact;
    if (averaging == Averaging::Micro) {
        detail::finalize_stats(report.all, totals[0].recall_sum + totals[1].recall_sum);
    } else {
        // macro All pools both classes per document, then averages documents
        std::map<std::string, detail::ClassAccum> per_doc;
        for (const auto& row : report.spans) {
            detail::ClassAccum& acc = per_doc[row.doc_id];
            ++acc.n_spans;
            if (row.exact) {
                ++acc.n_exact;
            }
            acc.recall_sum += row.recall;
        }
        if (!per_doc.empty()) {
            double exact_sum = 0.0;
            double recall_sum = 0.0;
            for (const auto& [doc_id, acc] : per_doc) {
                const double n = static_cast<double>(acc.n_spans);
                exact_sum += static_cast<double>(acc.n_exact) / n;
                recall_sum += acc.recall_sum / n;
            }
            const double d = static_cast<double>(per_doc.size());
            report.all.exact_match = exact_sum / d;
            report.all.word_recall = recall_sum / d;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json class_stats_to_json(const ClassStats& s) {
    return {
        {"n_spans", s.n_spans},
        {"n_exact", s.n_exact},
        {"exact_match", s.exact_match},
        {"word_recall", s.word_recall},
    };
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& row : report.spans) {
        spans.push_back({
            {"doc_id", row.doc_id},
            {"span_id", row.span_id},
            {"id_class", to_string(row.id_class)},
            {"prediction", row.prediction},
            {"gold", row.gold},
            {"exact", row.exact},
            {"word_recall", row.recall},
        });
    }
    return {
        {"classes",
         {
             {"direct", detail::class_stats_to_json(report.direct)},
             {"quasi", detail::class_stats_to_json(report.quasi)},
             {"all", detail::class_stats_to_json(report.all)},
         }},
        {"spans", std::move(spans)},
        {"missing_gold", report.missing_gold},
        {"missing_prediction", report.missing_prediction},
    };
}

inline std::string report_to_csv(const EvalReport& report) {
    auto line = [](const std::string& name, const ClassStats& s) {
        return name + "," + std::to_string(s.n_spans) + "," + std::to_string(s.n_exact) +
               "," + std::to_string(s.exact_match) + "," + std::to_string(s.word_recall) +
               "\n";
    };
    std::string out = "class,n_spans,n_exact,exact_match,word_recall\n";
    out += line("direct", report.direct);
    out += line("quasi", report.quasi);
    out += line("all", report.all);
    return out;
}

}  // namespace reident
