#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "reident/chunking.hpp"
#include "reident/errors.hpp"
#include "reident/hashing.hpp"
#include "reident/llm.hpp"
#include "reident/unicode.hpp"

namespace reident {

struct CandidatePrediction {
    std::string span_id;
    std::string value;
    std::vector<double> token_probs;  // each in (0,1]
    std::string raw_response;
    std::string prompt_hash;  // FNV-1a of the prompt, hex
    int retry_count = 0;
    bool refusal = false;  // true when no usable answer was obtained
};

struct RetryPolicy {
    int max_attempts = 3;
};

namespace detail {

inline std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
        ++count;
    }
    return count;
}

inline std::string trim_ws(const std::string& s) {
    std::vector<char32_t> cps = decode_utf8(s);
    std::size_t lo = 0;
    std::size_t hi = cps.size();
    while (lo < hi && is_space_cp(cps[lo])) {
        ++lo;
    }
    while (hi > lo && is_space_cp(cps[hi - 1])) {
        --hi;
    }
    return encode_utf8(std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(lo),
                                             cps.begin() + static_cast<std::ptrdiff_t>(hi)));
}

}  // namespace detail

/// Assemble the infilling prompt. Passages appear in rank order joined by
/// blank lines; the local context follows the instruction block. Plain
/// concatenation, applied once: braces inside passages or context are never
/// re-substituted.
inline std::string build_prompt(const std::vector<Chunk>& retrieved, const LocalContext& context) {
    if (detail::count_occurrences(context.text, "[MASK]") != 1) {
        throw ValidationError("context must contain exactly one [MASK]");
    }
    static const char* kPrefix =
        "Given the following potentially \nrelevant passages:\n\n";
    static const char* kMiddle =
        "\n\nRe-identify the fill in the blank\n(marked with [MASK]) in the text\nbelow. "
        "Structure the answer as a\nJSON file with the field\n're-identification' containing "
        "the\nvalue of [MASK]:\n\n";
    static const char* kSuffix = "\n\nAnswer:";

    std::string passages;
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
        if (i > 0) {
            passages += "\n\n";
        }
        passages += retrieved[i].text;
    }
    return kPrefix + passages + kMiddle + context.text + kSuffix;
}

/// Extract the answer from a completion: the first well-formed JSON object
/// anywhere in the text that carries a "re-identification" key. Reasoning
/// preambles, code fences, and trailing prose are all skipped over.
inline std::string parse_response(const std::string& raw) {
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) {
            continue;
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(raw.substr(start, end - start + 1));
        } catch (const nlohmann::json::parse_error&) {
            continue;
        }
        if (!parsed.is_object() || !parsed.contains("re-identification")) {
            continue;
        }
        const auto& v = parsed.at("re-identification");
        if (v.is_string()) {
            return detail::trim_ws(v.get<std::string>());
        }
        if (v.is_number() || v.is_boolean()) {
            return v.dump();
        }
        // null / object / array: not a usable value, keep scanning
    }
    throw ParseFailure(raw);
}

/// Joint probability of the value's token sequence.
inline double candidate_probability(const CandidatePrediction& pred) {
    if (pred.token_probs.empty()) {
        throw ValidationError("candidate has no token probabilities");
    }
    double p = 1.0;
    for (double tp : pred.token_probs) {
        if (!(tp > 0.0) || tp > 1.0) {
            throw ValidationError("token probability outside (0,1]");
        }
        p *= tp;
    }
    return p;
}

namespace detail {

/// Probabilities of the tokens that spell the value. The value substring is
/// located in the concatenated token stream; tokens overlapping it count.
/// When the value cannot be located (unusual tokenizations, escapes), every
/// completion token counts as a conservative fallback.
inline std::vector<double> value_token_probs(const CompletionResult& result,
                                             const std::string& value) {
    std::vector<double> all;
    all.reserve(result.token_logprobs.size());
    for (double lp : result.token_logprobs) {
        double p = std::exp(lp);
        if (p < 1e-300) {
            p = 1e-300;
        }
        if (p > 1.0) {
            p = 1.0;
        }
        all.push_back(p);
    }
    if (all.empty()) {
        return all;
    }

    std::string concat;
    std::vector<std::size_t> token_start(result.tokens.size());
    for (std::size_t i = 0; i < result.tokens.size(); ++i) {
        token_start[i] = concat.size();
        concat += result.tokens[i];
    }
    const std::size_t pos = value.empty() ? std::string::npos : concat.find(value);
    if (pos == std::string::npos) {
        return all;
    }
    const std::size_t lo = pos;
    const std::size_t hi = pos + value.size();
    std::vector<double> picked;
    for (std::size_t i = 0; i < result.tokens.size(); ++i) {
        const std::size_t t0 = token_start[i];
        const std::size_t t1 = t0 + result.tokens[i].size();
        if (t0 < hi && t1 > lo && t1 > t0) {
            picked.push_back(all[i]);
        }
    }
    return picked.empty() ? all : picked;
}

}  // namespace detail

/// One complete infilling attempt for a span: prompt, completion, parse,
/// token probability extraction, with retries on transport errors and
/// unparseable answers. Throws after the policy's attempts are exhausted.
inline CandidatePrediction infill_span(LlmBackend& backend, const std::vector<Chunk>& retrieved,
                                       const LocalContext& context, const std::string& span_id,
                                       RetryPolicy policy = {}) {
    const std::string prompt = build_prompt(retrieved, context);
    const std::string prompt_hash = to_hex(fnv1a64(prompt));

    for (int attempt = 0;; ++attempt) {
        try {
            CompletionResult result = backend.complete(prompt);
            result.validate();
            const std::string value = parse_response(result.text);

            CandidatePrediction pred;
            pred.span_id = span_id;
            pred.value = value;
            pred.token_probs = detail::value_token_probs(result, value);
            pred.raw_response = result.text;
            pred.prompt_hash = prompt_hash;
            pred.retry_count = attempt;
            if (value.empty() || pred.token_probs.empty()) {
                // an empty answer is treated as a refusal, not an error
                pred.refusal = true;
                pred.value.clear();
                pred.token_probs.clear();
            }
            return pred;
        } catch (const BackendError&) {
            if (attempt + 1 >= policy.max_attempts) {
                throw;
            }
        } catch (const ParseFailure&) {
            if (attempt + 1 >= policy.max_attempts) {
                throw;
            }
        }
    }
}

}  // namespace reident
