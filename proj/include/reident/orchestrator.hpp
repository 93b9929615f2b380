#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "reident/chunking.hpp"
#include "reident/corpus.hpp"
#include "reident/dense_rerank.hpp"
#include "reident/embeddings.hpp"
#include "reident/errors.hpp"
#include "reident/infill.hpp"
#include "reident/io.hpp"
#include "reident/llm.hpp"
#include "reident/ordering.hpp"
#include "reident/sparse_index.hpp"

namespace reident {

struct RunConfig {
    std::size_t k_sparse = 100;
    std::size_t k_dense = 10;
    std::size_t chunk_len = 1200;
    std::size_t window = 1000;
    RetryPolicy retry;
    // When set, the sparse query is the span's local context instead of the
    // whole document, recomputed at every step.
    bool per_span_sparse_query = false;
};

struct RunStats {
    std::size_t sparse_queries = 0;
    std::size_t reranks = 0;
    std::size_t infill_calls = 0;  // committed infills plus entropy probes
};

struct RunStep {
    std::string span_id;
    CandidatePrediction prediction;
    double probability = 0.0;
};

struct ReidentRun {
    std::string doc_id;
    OrderingStrategy strategy;
    std::vector<RunStep> steps;
    DeidDocument final_document;
};

struct BundleFailure {
    std::string order_label;
    std::string error;
};

struct RunBundle {
    std::string doc_id;
    std::vector<ReidentRun> runs;
    std::vector<BundleFailure> failures;
};

namespace detail {

inline std::string strip_markers(std::string text) {
    for (const char* marker : {"[MASK]", "[ANON]"}) {
        for (std::size_t pos = text.find(marker); pos != std::string::npos;
             pos = text.find(marker, pos)) {
            text.erase(pos, std::string(marker).size());
        }
    }
    return text;
}

}  // namespace detail

/// Re-identify every span of one document under one ordering. Retrieval
/// runs once per document (the whole-document query barely changes as spans
/// are restored); dense reranking and infilling run per span against the
/// current partial restoration. Per-span failures degrade to null
/// predictions; the loop always completes.
inline ReidentRun run_one(const DeidDocument& doc, const OrderingStrategy& strategy,
                          const SparseIndex& index, EmbeddingProvider& provider,
                          LlmBackend& backend, const RunConfig& cfg = {},
                          RunStats* stats = nullptr) {
    validate_document(doc);
    RunStats local_stats;
    RunStats& st = stats ? *stats : local_stats;

    auto retrieve_chunks = [&](const std::string& query) {
        ++st.sparse_queries;
        std::vector<Chunk> chunks;
        for (const auto& sd : index.query_topk(query, cfg.k_sparse)) {
            std::vector<Chunk> cs = chunk_document(sd.doc_id, index.doc_text(sd.doc_id),
                                                   cfg.chunk_len);
            for (auto& c : cs) {
                chunks.push_back(std::move(c));
            }
        }
        return chunks;
    };

    std::vector<Chunk> doc_chunks;
    if (!cfg.per_span_sparse_query) {
        doc_chunks = retrieve_chunks(render_sparse_query(doc));
    }

    auto attempt_span = [&](const DeidDocument& state, const std::string& span_id) {
        const LocalContext retrieval_ctx =
            local_context(state, span_id, cfg.window, RenderMode::Retrieval);
        std::vector<Chunk> per_span_chunks;
        if (cfg.per_span_sparse_query) {
            per_span_chunks = retrieve_chunks(detail::strip_markers(retrieval_ctx.text));
        }
        const std::vector<Chunk>& pool = cfg.per_span_sparse_query ? per_span_chunks : doc_chunks;
        ++st.reranks;
        const std::vector<ScoredChunk> top = rerank(pool, retrieval_ctx, provider, cfg.k_dense);
        std::vector<Chunk> top_chunks;
        top_chunks.reserve(top.size());
        for (const auto& sc : top) {
            top_chunks.push_back(sc.chunk);
        }
        const LocalContext infill_ctx =
            local_context(state, span_id, cfg.window, RenderMode::Infill);
        ++st.infill_calls;
        return infill_span(backend, top_chunks, infill_ctx, span_id, cfg.retry);
    };

    ReidentRun run;
    run.doc_id = doc.doc_id;
    run.strategy = strategy;

    if (strategy.kind == OrderingStrategy::Kind::EntropyAscending && strategy.dynamic) {
        // The walk's probes are full pipeline attempts, and the chosen
        // probe per step is committed as that step's prediction.
        DynamicEntropyResult walk = recompute_entropy_walk(doc, attempt_span);
        for (std::size_t i = 0; i < walk.order.size(); ++i) {
            RunStep step;
            step.span_id = walk.order[i];
            step.prediction = std::move(walk.predictions[i]);
            step.probability = candidate_probability(step.prediction);
            run.steps.push_back(std::move(step));
        }
        run.final_document = std::move(walk.final_document);
        return run;
    }

    std::vector<std::string> order;
    if (strategy.kind == OrderingStrategy::Kind::EntropyAscending) {
        // static probes against the pristine document; results discarded
        order = order_spans(doc, strategy, attempt_span);
    } else {
        order = order_spans(doc, strategy);
    }

    DeidDocument current = doc;
    for (const auto& span_id : order) {
        RunStep step;
        step.span_id = span_id;
        try {
            step.prediction = attempt_span(current, span_id);
            step.probability =
                step.prediction.refusal ? 0.0 : candidate_probability(step.prediction);
        } catch (const BackendError& e) {
            step.prediction = CandidatePrediction{span_id, "", {}, e.what(), "",
                                                  cfg.retry.max_attempts, true};
            step.probability = 0.0;
        } catch (const ParseFailure& e) {
            step.prediction = CandidatePrediction{span_id, "", {}, e.raw(), "",
                                                  cfg.retry.max_attempts, true};
            step.probability = 0.0;
        }
        current = substitute_span(current, span_id, step.prediction.value);
        run.steps.push_back(std::move(step));
    }
    run.final_document = std::move(current);
    return run;
}

/// Independent runs over several orderings, all starting from the pristine
/// document. A run that fails outright is recorded and skipped; survivors
/// make up the bundle.
inline RunBundle run_bundle(const DeidDocument& doc,
                            const std::vector<OrderingStrategy>& strategies,
                            const SparseIndex& index, EmbeddingProvider& provider,
                            LlmBackend& backend, const RunConfig& cfg = {},
                            RunStats* stats = nullptr) {
    if (strategies.empty()) {
        throw ValidationError("run_bundle needs at least one ordering strategy");
    }
    RunBundle bundle;
    bundle.doc_id = doc.doc_id;
    for (const auto& strategy : strategies) {
        try {
            bundle.runs.push_back(run_one(doc, strategy, index, provider, backend, cfg, stats));
        } catch (const Error& e) {
            bundle.failures.push_back({strategy.label(), e.what()});
        }
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline std::vector<std::uint64_t> default_aggregation_seeds() {
    return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
}

/// Named voting configurations. TOP_BOTTOM: both linear orders. RANDOM10:
/// the aggregation seeds (0-9 by default). RANDOM11: fixed seeds 0-10.
/// ALL: topdown, bottomup, the single seeded random order, entropy, plus
/// every aggregation-seed random order.
inline std::vector<OrderingStrategy> preset_strategies(
    const std::string& name, std::uint64_t random_single_seed = 42,
    const std::vector<std::uint64_t>& aggregation_seeds = default_aggregation_seeds()) {
    using K = OrderingStrategy::Kind;
    auto rnd = [](std::uint64_t seed) { return OrderingStrategy{K::Random, seed, false}; };

    if (name == "TOP_BOTTOM" || name == "top_bottom") {
        return {{K::TopDown, 0, false}, {K::BottomUp, 0, false}};
    }
    if (name == "RANDOM10" || name == "random10") {
        std::vector<OrderingStrategy> out;
        for (auto s : aggregation_seeds) {
            out.push_back(rnd(s));
        }
        return out;
    }
    if (name == "RANDOM11" || name == "random11") {
        std::vector<OrderingStrategy> out;
        for (std::uint64_t s = 0; s <= 10; ++s) {
            out.push_back(rnd(s));
        }
        return out;
    }
    if (name == "ALL" || name == "all") {
        std::vector<OrderingStrategy> out = {{K::TopDown, 0, false},
                                             {K::BottomUp, 0, false},
                                             rnd(random_single_seed),
                                             {K::EntropyAscending, 0, false}};
        for (auto s : aggregation_seeds) {
            out.push_back(rnd(s));
        }
        return out;
    }
    throw ValidationError("unknown preset \"" + name +
                          "\" (expected TOP_BOTTOM, RANDOM10, RANDOM11, or ALL)");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json step_to_json(const RunStep& step) {
    return nlohmann::json{
        {"span_id", step.span_id},
        {"value", step.prediction.value},
        {"probability", step.probability},
        {"token_probs", step.prediction.token_probs},
        {"prompt_hash", step.prediction.prompt_hash},
        {"retry_count", step.prediction.retry_count},
        {"refusal", step.prediction.refusal},
        {"raw_response", step.prediction.raw_response},
    };
}

inline RunStep step_from_json(const nlohmann::json& j) {
    RunStep step;
    step.span_id = j.at("span_id").get<std::string>();
    step.prediction.span_id = step.span_id;
    step.prediction.value = j.at("value").get<std::string>();
    step.probability = j.at("probability").get<double>();
    step.prediction.token_probs = j.at("token_probs").get<std::vector<double>>();
    step.prediction.prompt_hash = j.at("prompt_hash").get<std::string>();
    step.prediction.retry_count = j.at("retry_count").get<int>();
    step.prediction.refusal = j.at("refusal").get<bool>();
    step.prediction.raw_response = j.at("raw_response").get<std::string>();
    return step;
}

inline nlohmann::json run_to_json(const ReidentRun& run) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : run.steps) {
        steps.push_back(step_to_json(s));
    }
    return nlohmann::json{
        {"doc_id", run.doc_id},
        {"order", run.strategy.label()},
        {"steps", std::move(steps)},
        {"final_document", document_to_json(run.final_document)},
    };
}

inline ReidentRun run_from_json(const nlohmann::json& j) {
    ReidentRun run;
    run.doc_id = j.at("doc_id").get<std::string>();
    run.strategy = OrderingStrategy::parse(j.at("order").get<std::string>());
    for (const auto& js : j.at("steps")) {
        run.steps.push_back(step_from_json(js));
    }
    run.final_document = document_from_json(j.at("final_document"), "run " + run.doc_id);
    return run;
}

inline nlohmann::json bundle_to_json(const RunBundle& bundle) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : bundle.runs) {
        runs.push_back(run_to_json(r));
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : bundle.failures) {
        failures.push_back({{"order", f.order_label}, {"error", f.error}});
    }
    return nlohmann::json{
        {"doc_id", bundle.doc_id},
        {"runs", std::move(runs)},
        {"failures", std::move(failures)},
    };
}

inline RunBundle bundle_from_json(const nlohmann::json& j) {
    RunBundle bundle;
    bundle.doc_id = j.at("doc_id").get<std::string>();
    for (const auto& jr : j.at("runs")) {
        bundle.runs.push_back(run_from_json(jr));
    }
    if (j.contains("failures")) {
        for (const auto& jf : j.at("failures")) {
            bundle.failures.push_back({jf.at("order").get<std::string>(),
                                       jf.at("error").get<std::string>()});
        }
    }
    return bundle;
}

inline void save_run_bundles(const std::vector<RunBundle>& bundles,
                             const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bundles) {
        arr.push_back(bundle_to_json(b));
    }
    write_text_file(path, nlohmann::json{{"bundles", std::move(arr)}}.dump(2) + "\n");
}

inline std::vector<RunBundle> bundles_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("bundles")) {
        throw ValidationError("expected an object with a \"bundles\" array");
    }
    std::vector<RunBundle> bundles;
    for (const auto& jb : j.at("bundles")) {
        bundles.push_back(bundle_from_json(jb));
    }
    return bundles;
}

inline std::vector<RunBundle> load_run_bundles(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), line_of_byte(content, e.byte), e.what());
    }
    try {
        return bundles_from_json(j);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace reident
