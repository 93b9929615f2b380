#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "reident/errors.hpp"
#include "reident/io.hpp"
#include "reident/ordering.hpp"
#include "reident/orchestrator.hpp"
#include "reident/sparse_index.hpp"

namespace reident {

/// Backend spec strings:
///   embedder: "mock:hash[:<dim>[:<seed>]]" or "http(s)://host[:port]/path"
///   llm:      "mock:rules:<file>", "http(s)://...", or "openai:http(s)://..."
struct PipelineConfig {
    std::optional<std::string> corpus;
    std::optional<std::string> docs;
    std::optional<std::string> index;
    std::optional<std::string> out_dir;

    int k_sparse = 100;
    int k_dense = 10;
    int chunk_len = 1200;
    int window = 1000;
    Bm25Params bm25;

    std::optional<std::string> embedder;
    std::optional<std::string> llm;
    std::optional<std::string> llm_model;
    int max_attempts = 3;

    std::optional<std::string> preset;  // mutually exclusive with `order`
    std::optional<std::string> order;
    std::uint64_t random_seed = 42;
    std::vector<std::uint64_t> aggregation_seeds = default_aggregation_seeds();
    bool per_span_sparse_query = false;
    int jobs = 1;
};

namespace detail {

inline bool is_http_url(const std::string& s) {
    return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0;
}

inline bool valid_embedder_spec(const std::string& s) {
    if (is_http_url(s)) {
        return s.size() > (s.rfind("https://", 0) == 0 ? 8u : 7u);
    }
    if (s.rfind("mock:hash", 0) != 0) {
        return false;
    }
    // optional ":<dim>[:<seed>]" suffix, both plain unsigned integers
    std::string rest = s.substr(9);
    int parts = 0;
    while (!rest.empty()) {
        if (rest[0] != ':' || ++parts > 2) {
            return false;
        }
        rest.erase(0, 1);
        std::size_t i = 0;
        while (i < rest.size() && rest[i] != ':') {
            if (rest[i] < '0' || rest[i] > '9') {
                return false;
            }
            ++i;
        }
        if (i == 0) {
            return false;
        }
        rest.erase(0, i);
    }
    return true;
}

inline bool valid_llm_spec(const std::string& s) {
    if (is_http_url(s)) {
        return s.size() > (s.rfind("https://", 0) == 0 ? 8u : 7u);
    }
    if (s.rfind("openai:", 0) == 0) {
        return is_http_url(s.substr(7));
    }
    return s.rfind("mock:rules:", 0) == 0 && s.size() > 11;
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) {
        return path.lexically_normal().string();
    }
    return (base / path).lexically_normal().string();
}

}  // namespace detail

/// Collects every problem instead of stopping at the first one.
inline std::vector<std::string> validate_config(const PipelineConfig& cfg) {
    std::vector<std::string> issues;
    auto require = [&](const std::optional<std::string>& field, const char* name) {
        if (!field || field->empty()) {
            issues.push_back(std::string("missing required field: ") + name);
        }
    };
    require(cfg.corpus, "corpus");
    require(cfg.docs, "docs");
    require(cfg.out_dir, "out_dir");
    require(cfg.embedder, "embedder");
    require(cfg.llm, "llm");

    auto at_least_one = [&](int value, const char* name) {
        if (value < 1) {
            issues.push_back(std::string(name) + " must be >= 1, got " +
                             std::to_string(value));
        }
    };
    at_least_one(cfg.k_sparse, "k_sparse");
    at_least_one(cfg.k_dense, "k_dense");
    at_least_one(cfg.chunk_len, "chunk_len");
    at_least_one(cfg.window, "window");
    at_least_one(cfg.max_attempts, "max_attempts");
    at_least_one(cfg.jobs, "jobs");
    if (cfg.bm25.k1 < 0.0) {
        issues.push_back("k1 must be >= 0");
    }
    if (cfg.bm25.b < 0.0 || cfg.bm25.b > 1.0) {
        issues.push_back("b must be in [0,1]");
    }

    if (cfg.embedder && !cfg.embedder->empty() &&
        !detail::valid_embedder_spec(*cfg.embedder)) {
        issues.push_back("embedder spec not recognized: " + *cfg.embedder);
    }
    if (cfg.llm && !cfg.llm->empty() && !detail::valid_llm_spec(*cfg.llm)) {
        issues.push_back("llm spec not recognized: " + *cfg.llm);
    }

    if (cfg.preset && cfg.order) {
        issues.push_back("preset and order are mutually exclusive");
    }
    if (cfg.preset) {
        try {
            preset_strategies(*cfg.preset, cfg.random_seed, cfg.aggregation_seeds);
        } catch (const Error& e) {
            issues.push_back(e.what());
        }
    }
    if (cfg.order) {
        try {
            OrderingStrategy::parse(*cfg.order);
        } catch (const Error& e) {
            issues.push_back(e.what());
        }
    }
    if (cfg.aggregation_seeds.empty()) {
        issues.push_back("aggregation_seeds must not be empty");
    }
    return issues;
}

inline void ensure_valid(const PipelineConfig& cfg) {
    const std::vector<std::string> issues = validate_config(cfg);
    if (!issues.empty()) {
        throw ConfigError(issues);
    }
}

/// Parses a config object. Relative paths are resolved against `base_dir`
/// (the config file's directory). Unknown keys are collected as validation
/// issues so typos never pass silently.
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j,
                                            const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) {
        throw ConfigError({"config root must be a JSON object"});
    }
    static const std::set<std::string> known = {
        "corpus",       "docs",         "index",
        "out_dir",      "k_sparse",     "k_dense",
        "chunk_len",    "window",       "k1",
        "b",            "embedder",     "llm",
        "llm_model",    "max_attempts", "preset",
        "order",        "random_seed",  "aggregation_seeds",
        "per_span_sparse_query",        "jobs",
    };
    std::vector<std::string> issues;
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (known.find(key) == known.end()) {
            issues.push_back("unknown config key: " + key);
        }
    }

    PipelineConfig cfg;
    auto get_string = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key)) {
            return std::nullopt;
        }
        if (!j.at(key).is_string()) {
            issues.push_back(std::string(key) + " must be a string");
            return std::nullopt;
        }
        return j.at(key).get<std::string>();
    };
    auto get_int = [&](const char* key, int fallback) -> int {
        if (!j.contains(key)) {
            return fallback;
        }
        if (!j.at(key).is_number_integer()) {
            issues.push_back(std::string(key) + " must be an integer");
            return fallback;
        }
        return j.at(key).get<int>();
    };

    auto path_field = [&](const char* key) -> std::optional<std::string> {
        auto value = get_string(key);
        if (!value) {
            return std::nullopt;
        }
        return detail::resolve_path(*value, base_dir);
    };
    cfg.corpus = path_field("corpus");
    cfg.docs = path_field("docs");
    cfg.index = path_field("index");
    cfg.out_dir = path_field("out_dir");

    cfg.k_sparse = get_int("k_sparse", cfg.k_sparse);
    cfg.k_dense = get_int("k_dense", cfg.k_dense);
    cfg.chunk_len = get_int("chunk_len", cfg.chunk_len);
    cfg.window = get_int("window", cfg.window);
    cfg.max_attempts = get_int("max_attempts", cfg.max_attempts);
    cfg.jobs = get_int("jobs", cfg.jobs);
    if (j.contains("k1")) {
        if (!j.at("k1").is_number()) {
            issues.push_back("k1 must be a number");
        } else {
            cfg.bm25.k1 = j.at("k1").get<double>();
        }
    }
    if (j.contains("b")) {
        if (!j.at("b").is_number()) {
            issues.push_back("b must be a number");
        } else {
            cfg.bm25.b = j.at("b").get<double>();
        }
    }

    cfg.embedder = get_string("embedder");
    cfg.llm = get_string("llm");
    if (cfg.llm && cfg.llm->rfind("mock:rules:", 0) == 0) {
        cfg.llm = "mock:rules:" + detail::resolve_path(cfg.llm->substr(11), base_dir);
    }
    cfg.llm_model = get_string("llm_model");

    cfg.preset = get_string("preset");
    cfg.order = get_string("order");
    if (j.contains("random_seed")) {
        if (!j.at("random_seed").is_number_unsigned() &&
            !j.at("random_seed").is_number_integer()) {
            issues.push_back("random_seed must be a non-negative integer");
        } else if (j.at("random_seed").is_number_integer() &&
                   j.at("random_seed").get<std::int64_t>() < 0) {
            issues.push_back("random_seed must be a non-negative integer");
        } else {
            cfg.random_seed = j.at("random_seed").get<std::uint64_t>();
        }
    }
    if (j.contains("aggregation_seeds")) {
        if (!j.at("aggregation_seeds").is_array()) {
            issues.push_back("aggregation_seeds must be an array of integers");
        } else {
            std::vector<std::uint64_t> seeds;
            bool ok = true;
            for (const auto& s : j.at("aggregation_seeds")) {
                if (!s.is_number_integer() ||
                    (!s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
                    issues.push_back("aggregation_seeds must be non-negative integers");
                    ok = false;
                    break;
                }
                seeds.push_back(s.get<std::uint64_t>());
            }
            if (ok) {
                cfg.aggregation_seeds = std::move(seeds);
            }
        }
    }
    if (j.contains("per_span_sparse_query")) {
        if (!j.at("per_span_sparse_query").is_boolean()) {
            issues.push_back("per_span_sparse_query must be a boolean");
        } else {
            cfg.per_span_sparse_query = j.at("per_span_sparse_query").get<bool>();
        }
    }

    if (!issues.empty()) {
        throw ConfigError(issues);
    }
    return cfg;
}

/// Reads and parses a config file without validating required fields, so
/// callers can layer flag overrides on top before `ensure_valid`.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), line_of_byte(content, e.byte), e.what());
    }
    return parse_pipeline_config(j, path.parent_path());
}

/// The ordering strategies a config asks for: a preset expands to its run
/// list, a single order runs alone, and with neither set the full preset
/// is used.
inline std::vector<OrderingStrategy> resolve_strategies(const PipelineConfig& cfg) {
    if (cfg.order) {
        return {OrderingStrategy::parse(*cfg.order)};
    }
    const std::string preset = cfg.preset.value_or("all");
    return preset_strategies(preset, cfg.random_seed, cfg.aggregation_seeds);
}

}  // namespace reident
