#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "reident/reident.hpp"

namespace {

void print_summary(const reident::EvalReport& report) {
    auto line = [](const char* name, const reident::ClassStats& s) {
        std::cerr << name << ": n=" << s.n_spans << " exact_match=" << s.exact_match
                  << " word_recall=" << s.word_recall << "\n";
    };
    line("direct", report.direct);
    line("quasi", report.quasi);
    line("all", report.all);
    if (!report.missing_gold.empty()) {
        std::cerr << "warning: " << report.missing_gold.size()
                  << " predicted span(s) lack a gold value and were excluded\n";
    }
    if (!report.missing_prediction.empty()) {
        std::cerr << "warning: " << report.missing_prediction.size()
                  << " gold span(s) have no prediction\n";
    }
}

std::map<std::pair<std::string, std::string>, std::string> load_predictions(
    const std::string& path) {
    const std::string content = reident::read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw reident::ParseError(path, reident::line_of_byte(content, e.byte), e.what());
    }
    if (j.is_object() && j.contains("documents")) {
        return reident::detail::predictions_from_aggregated(
            reident::aggregated_from_json(j));
    }
    if (j.is_object() && j.contains("bundles")) {
        return reident::detail::predictions_from_aggregated(
            reident::detail::aggregate_bundles(reident::bundles_from_json(j)));
    }
    throw reident::ValidationError(
        "predictions file must contain \"documents\" (aggregated) or \"bundles\" "
        "(runs): " +
        path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented re-identification of masked spans"};
    app.require_subcommand(1);

    // index build
    auto* index_cmd = app.add_subcommand("index", "Sparse index maintenance");
    index_cmd->require_subcommand(1);
    auto* build_cmd =
        index_cmd->add_subcommand("build", "Build a BM25 index over a background corpus");
    std::string build_corpus;
    std::string build_out;
    reident::Bm25Params build_params;
    build_cmd->add_option("--corpus", build_corpus,
                          "Background corpus (JSONL file or directory of .json files)")
        ->required();
    build_cmd->add_option("--out", build_out, "Output index path")->required();
    build_cmd->add_option("--k1", build_params.k1, "BM25 k1 (term-frequency saturation)");
    build_cmd->add_option("--b", build_params.b, "BM25 b (length normalization)");
    build_cmd->callback([&]() {
        const reident::BackgroundCorpus corpus = reident::load_background(build_corpus);
        const reident::SparseIndex index = reident::SparseIndex::build(corpus, build_params);
        index.save(build_out);
        std::cerr << "indexed " << index.doc_count() << " documents -> " << build_out
                  << "\n";
    });

    // reidentify
    auto* reid_cmd =
        app.add_subcommand("reidentify", "Run the attack over de-identified documents");
    std::string reid_docs;
    std::string reid_index;
    std::string reid_embedder;
    std::string reid_llm;
    std::string reid_llm_model;
    std::string reid_order;
    std::string reid_preset;
    std::string reid_out;
    std::uint64_t reid_seed = 42;
    std::vector<std::uint64_t> reid_agg_seeds = reident::default_aggregation_seeds();
    int reid_jobs = 1;
    reident::RunConfig reid_cfg;
    reid_cmd->add_option("--docs", reid_docs, "De-identified documents (JSON)")
        ->required();
    reid_cmd->add_option("--index", reid_index, "Sparse index built by `index build`")
        ->required();
    reid_cmd
        ->add_option("--embedder", reid_embedder,
                     "Embedding endpoint URL or mock:hash[:dim[:seed]]")
        ->required();
    reid_cmd
        ->add_option("--llm", reid_llm,
                     "LLM endpoint URL, openai:<url>, or mock:rules:<file>")
        ->required();
    reid_cmd->add_option("--llm-model", reid_llm_model,
                         "Model name passed to openai-style endpoints");
    auto* order_group = reid_cmd->add_option_group("ordering");
    order_group->add_option("--order", reid_order,
                            "Single ordering: topdown | bottomup | random:<seed> | "
                            "entropy | entropy,dynamic");
    order_group->add_option("--preset", reid_preset,
                            "Run set: top_bottom | random10 | random11 | all");
    order_group->require_option(1);
    reid_cmd->add_option("--out", reid_out, "Output runs file")->required();
    reid_cmd->add_option("--random-seed", reid_seed,
                         "Seed for the preset's single random order");
    reid_cmd->add_option("--agg-seeds", reid_agg_seeds,
                         "Seeds for the preset's random-order ensemble");
    reid_cmd->add_option("--jobs", reid_jobs, "Documents processed in parallel");
    reid_cmd->add_option("--k-sparse", reid_cfg.k_sparse, "Sparse candidates per query");
    reid_cmd->add_option("--k-dense", reid_cfg.k_dense, "Chunks kept after reranking");
    reid_cmd->add_option("--chunk-len", reid_cfg.chunk_len,
                         "Chunk target length (characters)");
    reid_cmd->add_option("--window", reid_cfg.window, "Local context window (characters)");
    reid_cmd->add_option("--max-attempts", reid_cfg.retry.max_attempts,
                         "Attempts per span before recording a failure");
    reid_cmd->add_flag("--per-span-sparse-query", reid_cfg.per_span_sparse_query,
                       "Re-run sparse retrieval from each span's local context");
    reid_cmd->callback([&]() {
        const std::vector<reident::DeidDocument> documents =
            reident::load_deid_documents(reid_docs);
        const reident::SparseIndex index = reident::SparseIndex::load(reid_index);
        auto provider = reident::make_embedding_provider(reid_embedder);
        auto backend = reident::make_llm_backend(reid_llm, reid_llm_model);
        std::vector<reident::OrderingStrategy> strategies;
        if (!reid_order.empty()) {
            strategies.push_back(reident::OrderingStrategy::parse(reid_order));
        } else {
            strategies =
                reident::preset_strategies(reid_preset, reid_seed, reid_agg_seeds);
        }
        const std::vector<reident::RunBundle> bundles = reident::run_bundles_parallel(
            documents, strategies, index, *provider, *backend, reid_cfg, reid_jobs,
            &std::cerr);
        reident::save_run_bundles(bundles, reid_out);
        std::cerr << "wrote " << bundles.size() << " bundle(s) -> " << reid_out << "\n";
    });

    // aggregate
    auto* agg_cmd =
        app.add_subcommand("aggregate", "Vote across runs file(s) span by span");
    std::vector<std::string> agg_runs;
    std::string agg_out;
    agg_cmd->add_option("--runs", agg_runs, "Runs file(s) produced by reidentify")
        ->required()
        ->expected(-1);
    agg_cmd->add_option("--out", agg_out, "Output aggregate file")->required();
    agg_cmd->callback([&]() {
        std::vector<reident::RunBundle> merged;
        std::map<std::string, std::size_t> slot;
        for (const auto& path : agg_runs) {
            for (auto& bundle : reident::load_run_bundles(path)) {
                const auto it = slot.find(bundle.doc_id);
                if (it == slot.end()) {
                    slot[bundle.doc_id] = merged.size();
                    merged.push_back(std::move(bundle));
                    continue;
                }
                reident::RunBundle& dst = merged[it->second];
                for (auto& run : bundle.runs) {
                    dst.runs.push_back(std::move(run));
                }
                for (auto& failure : bundle.failures) {
                    dst.failures.push_back(std::move(failure));
                }
            }
        }
        reident::save_aggregated(reident::detail::aggregate_bundles(merged), agg_out);
        std::cerr << "aggregated " << merged.size() << " document(s) -> " << agg_out
                  << "\n";
    });

    // evaluate
    auto* eval_cmd =
        app.add_subcommand("evaluate", "Score predictions against gold values");
    std::string eval_preds;
    std::string eval_docs;
    std::string eval_out;
    std::string eval_csv;
    bool eval_macro = false;
    eval_cmd
        ->add_option("--predictions", eval_preds,
                     "Aggregate file or runs file to score")
        ->required();
    eval_cmd->add_option("--docs", eval_docs, "Documents carrying gold values")
        ->required();
    eval_cmd->add_option("--out", eval_out, "Output report (JSON)")->required();
    eval_cmd->add_option("--csv", eval_csv, "Also write a per-class CSV table");
    eval_cmd->add_flag("--macro", eval_macro,
                       "Average per-document rates instead of pooling spans");
    eval_cmd->callback([&]() {
        const std::vector<reident::DeidDocument> documents =
            reident::load_deid_documents(eval_docs);
        const auto predictions = load_predictions(eval_preds);
        const reident::EvalReport report = reident::evaluate(
            documents, predictions,
            eval_macro ? reident::Averaging::Macro : reident::Averaging::Micro);
        reident::write_text_file(eval_out,
                                 reident::report_to_json(report).dump(2) + "\n");
        if (!eval_csv.empty()) {
            reident::write_text_file(eval_csv, reident::report_to_csv(report));
        }
        print_summary(report);
    });

    // run-all
    auto* run_cmd =
        app.add_subcommand("run-all", "Index, reidentify, aggregate, and evaluate");
    std::string run_config;
    std::string ov_corpus, ov_docs, ov_index, ov_out_dir, ov_embedder, ov_llm,
        ov_llm_model, ov_preset, ov_order;
    int ov_jobs = 0, ov_k_sparse = 0, ov_k_dense = 0, ov_chunk_len = 0, ov_window = 0,
        ov_max_attempts = 0;
    std::uint64_t ov_seed = 0;
    bool ov_per_span = false;
    run_cmd->add_option("--config", run_config, "Pipeline config (JSON)")->required();
    run_cmd->add_option("--corpus", ov_corpus, "Override: background corpus path");
    run_cmd->add_option("--docs", ov_docs, "Override: documents path");
    run_cmd->add_option("--index", ov_index, "Override: reuse an existing index");
    run_cmd->add_option("--out-dir", ov_out_dir, "Override: output directory");
    run_cmd->add_option("--embedder", ov_embedder, "Override: embedding endpoint");
    run_cmd->add_option("--llm", ov_llm, "Override: LLM endpoint");
    run_cmd->add_option("--llm-model", ov_llm_model, "Override: model name");
    run_cmd->add_option("--preset", ov_preset, "Override: ordering preset");
    run_cmd->add_option("--order", ov_order, "Override: single ordering");
    run_cmd->add_option("--jobs", ov_jobs, "Override: parallel documents");
    run_cmd->add_option("--k-sparse", ov_k_sparse, "Override: sparse candidates");
    run_cmd->add_option("--k-dense", ov_k_dense, "Override: reranked chunks");
    run_cmd->add_option("--chunk-len", ov_chunk_len, "Override: chunk target length");
    run_cmd->add_option("--window", ov_window, "Override: context window");
    run_cmd->add_option("--max-attempts", ov_max_attempts, "Override: retry budget");
    run_cmd->add_option("--random-seed", ov_seed, "Override: single random seed");
    run_cmd->add_flag("--per-span-sparse-query", ov_per_span,
                      "Override: per-span sparse retrieval");
    run_cmd->callback([&]() {
        reident::PipelineConfig cfg = reident::load_pipeline_config(run_config);
        auto override_str = [&](const std::string& v,
                                std::optional<std::string>& field) {
            if (!v.empty()) {
                field = v;
            }
        };
        override_str(ov_corpus, cfg.corpus);
        override_str(ov_docs, cfg.docs);
        override_str(ov_index, cfg.index);
        override_str(ov_out_dir, cfg.out_dir);
        override_str(ov_embedder, cfg.embedder);
        override_str(ov_llm, cfg.llm);
        override_str(ov_llm_model, cfg.llm_model);
        if (!ov_preset.empty()) {
            cfg.preset = ov_preset;
            cfg.order.reset();
        }
        if (!ov_order.empty()) {
            cfg.order = ov_order;
            cfg.preset.reset();
        }
        if (run_cmd->count("--jobs") != 0u) {
            cfg.jobs = ov_jobs;
        }
        if (run_cmd->count("--k-sparse") != 0u) {
            cfg.k_sparse = ov_k_sparse;
        }
        if (run_cmd->count("--k-dense") != 0u) {
            cfg.k_dense = ov_k_dense;
        }
        if (run_cmd->count("--chunk-len") != 0u) {
            cfg.chunk_len = ov_chunk_len;
        }
        if (run_cmd->count("--window") != 0u) {
            cfg.window = ov_window;
        }
        if (run_cmd->count("--max-attempts") != 0u) {
            cfg.max_attempts = ov_max_attempts;
        }
        if (run_cmd->count("--random-seed") != 0u) {
            cfg.random_seed = ov_seed;
        }
        if (run_cmd->count("--per-span-sparse-query") != 0u) {
            cfg.per_span_sparse_query = true;
        }
        const reident::PipelineResult result = reident::run_all(cfg, &std::cerr);
        std::cerr << "aggregated scores:\n";
        print_summary(result.report);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const reident::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
