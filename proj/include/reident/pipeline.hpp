#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "reident/aggregation.hpp"
#include "reident/config.hpp"
#include "reident/corpus.hpp"
#include "reident/errors.hpp"
#include "reident/http_backends.hpp"
#include "reident/metrics.hpp"
#include "reident/orchestrator.hpp"
#include "reident/sparse_index.hpp"

namespace reident {

inline std::shared_ptr<EmbeddingProvider> make_embedding_provider(
    const std::string& spec) {
    if (detail::is_http_url(spec)) {
        return std::make_shared<CachingEmbeddingProvider>(
            std::make_shared<HttpEmbeddingProvider>(spec));
    }
    if (spec.rfind("mock:hash", 0) == 0) {
        std::size_t dim = 16;
        std::uint64_t seed = 0;
        std::string rest = spec.substr(9);
        if (!rest.empty()) {
            if (rest[0] != ':') {
                throw ValidationError("embedder spec not recognized: " + spec);
            }
            rest.erase(0, 1);
            const std::size_t colon = rest.find(':');
            try {
                dim = std::stoul(rest.substr(0, colon));
                if (colon != std::string::npos) {
                    seed = std::stoull(rest.substr(colon + 1));
                }
            } catch (const std::exception&) {
                throw ValidationError("embedder spec not recognized: " + spec);
            }
        }
        return std::make_shared<CachingEmbeddingProvider>(
            std::make_shared<HashEmbeddingProvider>(dim, seed));
    }
    throw ValidationError("embedder spec not recognized: " + spec);
}

inline std::shared_ptr<LlmBackend> make_llm_backend(const std::string& spec,
                                                    const std::string& model = "") {
    if (spec.rfind("openai:", 0) == 0) {
        return std::make_shared<OpenAiLlmBackend>(spec.substr(7), model);
    }
    if (detail::is_http_url(spec)) {
        return std::make_shared<HttpLlmBackend>(spec);
    }
    if (spec.rfind("mock:rules:", 0) == 0) {
        return std::make_shared<RulesLlmBackend>(
            RulesLlmBackend::from_file(spec.substr(11)));
    }
    throw ValidationError("llm spec not recognized: " + spec);
}

struct PipelineResult {
    std::vector<RunBundle> bundles;
    std::vector<AggregatedDocument> aggregated;
    EvalReport report;                            // scored on aggregated values
    std::map<std::string, EvalReport> per_order;  // scored per ordering label
    RunStats stats;
};

namespace detail {

inline std::map<std::pair<std::string, std::string>, std::string>
predictions_from_aggregated(const std::vector<AggregatedDocument>& docs) {
    std::map<std::pair<std::string, std::string>, std::string> preds;
    for (const auto& doc : docs) {
        for (const auto& span : doc.spans) {
            preds[{doc.doc_id, span.span_id}] = span.chosen_value;
        }
    }
    return preds;
}

inline std::map<std::string, std::map<std::pair<std::string, std::string>, std::string>>
predictions_per_order(const std::vector<RunBundle>& bundles) {
    std::map<std::string, std::map<std::pair<std::string, std::string>, std::string>>
        per_order;
    for (const auto& bundle : bundles) {
        for (const auto& run : bundle.runs) {
            auto& preds = per_order[run.strategy.label()];
            for (const auto& step : run.steps) {
                preds[{bundle.doc_id, step.span_id}] =
                    step.prediction.refusal ? "" : step.prediction.value;
            }
        }
    }
    return per_order;
}

inline std::vector<AggregatedDocument> aggregate_bundles(
    const std::vector<RunBundle>& bundles) {
    std::vector<AggregatedDocument> aggregated;
    for (const auto& bundle : bundles) {
        AggregatedDocument doc;
        doc.doc_id = bundle.doc_id;
        if (!bundle.runs.empty()) {
            doc.spans = aggregate_bundle(bundle);
        }
        aggregated.push_back(std::move(doc));
    }
    return aggregated;
}

}  // namespace detail

/// Runs every configured ordering over every document. Documents are
/// processed in parallel up to `jobs` threads; results land in
/// per-document slots so the output is independent of scheduling.
inline std::vector<RunBundle> run_bundles_parallel(
    const std::vector<DeidDocument>& documents,
    const std::vector<OrderingStrategy>& strategies, const SparseIndex& index,
    EmbeddingProvider& provider, LlmBackend& backend, const RunConfig& run_cfg,
    int jobs = 1, std::ostream* log = nullptr, RunStats* stats_out = nullptr) {
    std::vector<RunBundle> bundles(documents.size());
    std::vector<RunStats> stats(documents.size());

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= documents.size()) {
                return;
            }
            try {
                bundles[i] = run_bundle(documents[i], strategies, index, provider,
                                        backend, run_cfg, &stats[i]);
                if (log != nullptr) {
                    std::lock_guard<std::mutex> lock(log_mutex);
                    *log << "doc " << documents[i].doc_id << ": "
                         << bundles[i].runs.size() << " runs, "
                         << bundles[i].failures.size() << " failures\n";
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                return;
            }
        }
    };

    const std::size_t n_threads = std::min<std::size_t>(
        std::max(jobs, 1), std::max<std::size_t>(documents.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    if (stats_out != nullptr) {
        for (const auto& s : stats) {
            stats_out->sparse_queries += s.sparse_queries;
            stats_out->reranks += s.reranks;
            stats_out->infill_calls += s.infill_calls;
        }
    }
    return bundles;
}

/// run_bundles_parallel plus aggregation and scoring.
inline PipelineResult run_pipeline(const std::vector<DeidDocument>& documents,
                                   const std::vector<OrderingStrategy>& strategies,
                                   const SparseIndex& index,
                                   EmbeddingProvider& provider, LlmBackend& backend,
                                   const RunConfig& run_cfg, int jobs = 1,
                                   std::ostream* log = nullptr) {
    PipelineResult result;
    result.bundles = run_bundles_parallel(documents, strategies, index, provider,
                                          backend, run_cfg, jobs, log, &result.stats);
    result.aggregated = detail::aggregate_bundles(result.bundles);
    result.report =
        evaluate(documents, detail::predictions_from_aggregated(result.aggregated));
    for (const auto& [label, preds] : detail::predictions_per_order(result.bundles)) {
        result.per_order[label] = evaluate(documents, preds);
    }
    return result;
}

inline nlohmann::json pipeline_report_json(const PipelineResult& result) {
    nlohmann::json per_order = nlohmann::json::object();
    for (const auto& [label, report] : result.per_order) {
        per_order[label] = report_to_json(report).at("classes");
    }
    return {
        {"aggregated", report_to_json(result.report)},
        {"per_order", std::move(per_order)},
        {"stats",
         {
             {"sparse_queries", result.stats.sparse_queries},
             {"reranks", result.stats.reranks},
             {"infill_calls", result.stats.infill_calls},
         }},
    };
}

/// The `run-all` entry point: loads everything named by the config, builds
/// or loads the index, runs the bundles, and writes index/runs/agg/report
/// artifacts under out_dir.
inline PipelineResult run_all(const PipelineConfig& cfg, std::ostream* log = nullptr) {
    ensure_valid(cfg);
    namespace fs = std::filesystem;
    const fs::path out_dir(*cfg.out_dir);
    fs::create_directories(out_dir);

    const std::vector<DeidDocument> documents = load_deid_documents(*cfg.docs);

    SparseIndex index;
    if (cfg.index) {
        index = SparseIndex::load(*cfg.index);
    } else {
        const BackgroundCorpus corpus = load_background(*cfg.corpus);
        index = SparseIndex::build(corpus, cfg.bm25);
        index.save(out_dir / "index.json");
    }

    const std::shared_ptr<EmbeddingProvider> provider =
        make_embedding_provider(*cfg.embedder);
    const std::shared_ptr<LlmBackend> backend =
        make_llm_backend(*cfg.llm, cfg.llm_model.value_or(""));

    RunConfig run_cfg;
    run_cfg.k_sparse = cfg.k_sparse;
    run_cfg.k_dense = cfg.k_dense;
    run_cfg.chunk_len = cfg.chunk_len;
    run_cfg.window = cfg.window;
    run_cfg.retry.max_attempts = cfg.max_attempts;
    run_cfg.per_span_sparse_query = cfg.per_span_sparse_query;

    PipelineResult result =
        run_pipeline(documents, resolve_strategies(cfg), index, *provider, *backend,
                     run_cfg, cfg.jobs, log);

    save_run_bundles(result.bundles, out_dir / "runs.json");
    save_aggregated(result.aggregated, out_dir / "agg.json");
    write_text_file(out_dir / "report.json", pipeline_report_json(result).dump(2) + "\n");
    write_text_file(out_dir / "report.csv", report_to_csv(result.report));
    return result;
}

}  // namespace reident
