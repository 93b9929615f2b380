#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "reident/corpus.hpp"
#include "reident/errors.hpp"
#include "reident/hashing.hpp"
#include "reident/infill.hpp"

namespace reident {

struct OrderingStrategy {
    enum class Kind { TopDown, BottomUp, Random, EntropyAscending };

    Kind kind = Kind::TopDown;
    std::uint64_t seed = 0;  // Random only
    bool dynamic = false;    // EntropyAscending only: re-probe after each step

    std::string label() const {
        switch (kind) {
            case Kind::TopDown:
                return "topdown";
            case Kind::BottomUp:
                return "bottomup";
            case Kind::Random:
                return "random:" + std::to_string(seed);
            case Kind::EntropyAscending:
                return dynamic ? "entropy,dynamic" : "entropy";
        }
        return "?";
    }

    /// Parses the CLI form: topdown | bottomup | random:<seed> |
    /// entropy[,dynamic]. label() round-trips through here.
    static OrderingStrategy parse(const std::string& text) {
        OrderingStrategy s;
        if (text == "topdown") {
            s.kind = Kind::TopDown;
        } else if (text == "bottomup") {
            s.kind = Kind::BottomUp;
        } else if (text == "entropy") {
            s.kind = Kind::EntropyAscending;
        } else if (text == "entropy,dynamic") {
            s.kind = Kind::EntropyAscending;
            s.dynamic = true;
        } else if (text.rfind("random:", 0) == 0) {
            s.kind = Kind::Random;
            const std::string num = text.substr(7);
            if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) {
                throw ValidationError("bad random seed in order \"" + text + "\"");
            }
            s.seed = std::stoull(num);
        } else {
            throw ValidationError(
                "unknown order \"" + text +
                "\" (expected topdown, bottomup, random:<seed>, or entropy[,dynamic])");
        }
        return s;
    }

    friend bool operator==(const OrderingStrategy&, const OrderingStrategy&) = default;
};

struct SpanEntropy {
    std::string span_id;
    double entropy = 0.0;
    std::vector<double> token_probs;
};

/// H = -sum p_i ln p_i over the sampled tokens' probabilities.
inline double span_entropy(const std::vector<double>& token_probs) {
    if (token_probs.empty()) {
        throw ValidationError("span_entropy needs at least one probability");
    }
    double h = 0.0;
    for (double p : token_probs) {
        if (!(p > 0.0) || p > 1.0) {
            throw ValidationError("token probability outside (0,1]");
        }
        h -= p * std::log(p);
    }
    return h;
}

/// Dry-run infill of one span against a document state. Used to measure
/// uncertainty for entropy orderings; the result is not committed unless
/// the dynamic walk commits it.
using EntropyProbe =
    std::function<CandidatePrediction(const DeidDocument&, const std::string& span_id)>;

namespace detail {

inline std::vector<std::string> topdown_ids(const DeidDocument& doc) {
    std::vector<std::string> ids;
    ids.reserve(doc.spans.size());
    for (const auto& s : doc.spans) {
        ids.push_back(s.span_id);
    }
    return ids;
}

inline double probe_entropy(const EntropyProbe& probe, const DeidDocument& doc,
                            const std::string& span_id) {
    const CandidatePrediction pred = probe(doc, span_id);
    if (pred.refusal || pred.token_probs.empty()) {
        throw BackendError("entropy probe for span " + span_id + " produced no probabilities");
    }
    return span_entropy(pred.token_probs);
}

}  // namespace detail

/// The order in which a document's spans will be re-identified. Always a
/// permutation of the document's span ids.
inline std::vector<std::string> order_spans(const DeidDocument& doc,
                                            const OrderingStrategy& strategy,
                                            const EntropyProbe& probe = nullptr) {
    std::vector<std::string> ids = detail::topdown_ids(doc);
    switch (strategy.kind) {
        case OrderingStrategy::Kind::TopDown:
            return ids;
        case OrderingStrategy::Kind::BottomUp:
            std::reverse(ids.begin(), ids.end());
            return ids;
        case OrderingStrategy::Kind::Random: {
            SplitMix64 rng(strategy.seed);
            for (std::size_t i = ids.size(); i > 1; --i) {
                const std::size_t j = rng.next_below(i);
                std::swap(ids[i - 1], ids[j]);
            }
            return ids;
        }
        case OrderingStrategy::Kind::EntropyAscending: {
            if (!probe) {
                throw ValidationError("entropy ordering requires a probe");
            }
            // start offsets break entropy ties; spans are in start order
            std::vector<std::pair<double, std::size_t>> keyed;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                keyed.emplace_back(detail::probe_entropy(probe, doc, ids[i]), i);
            }
            std::stable_sort(keyed.begin(), keyed.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::string> out;
            out.reserve(ids.size());
            for (const auto& [h, i] : keyed) {
                out.push_back(ids[i]);
            }
            return out;
        }
    }
    throw ValidationError("unhandled ordering kind");
}

struct DynamicEntropyResult {
    std::vector<std::string> order;
    // the committed probe prediction per span, in walk order
    std::vector<CandidatePrediction> predictions;
    DeidDocument final_document;
};

/// Entropy ordering with recomputation: at each step every remaining span
/// is probed against the current document, the lowest-entropy span is
/// chosen, and its probe prediction is committed before the next step.
/// n spans cost n + (n-1) + ... + 1 = n(n+1)/2 probes.
inline DynamicEntropyResult recompute_entropy_walk(const DeidDocument& doc,
                                                   const EntropyProbe& probe) {
    if (!probe) {
        throw ValidationError("entropy ordering requires a probe");
    }
    DynamicEntropyResult result;
    result.final_document = doc;
    std::vector<std::string> remaining = detail::topdown_ids(doc);

    while (!remaining.empty()) {
        double best_h = 0.0;
        std::size_t best_i = remaining.size();
        CandidatePrediction best_pred;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            CandidatePrediction pred = probe(result.final_document, remaining[i]);
            if (pred.refusal || pred.token_probs.empty()) {
                throw BackendError("entropy probe for span " + remaining[i] +
                                   " produced no probabilities");
            }
            const double h = span_entropy(pred.token_probs);
            // remaining is kept in start-offset order, so strict < keeps
            // the earliest span on ties
            if (best_i == remaining.size() || h < best_h) {
                best_h = h;
                best_i = i;
                best_pred = std::move(pred);
            }
        }
        const std::string chosen = remaining[best_i];
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_i));
        result.final_document = substitute_span(result.final_document, chosen, best_pred.value);
        result.order.push_back(chosen);
        result.predictions.push_back(std::move(best_pred));
    }
    return result;
}

inline std::vector<std::string> recompute_entropy_schedule(const DeidDocument& doc,
                                                           const EntropyProbe& probe) {
    return recompute_entropy_walk(doc, probe).order;
}

}  // namespace reident
