#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "reident/errors.hpp"
#include "reident/io.hpp"
#include "reident/unicode.hpp"

namespace reident {

struct CompletionResult {
    std::string text;
    std::vector<std::string> tokens;
    std::vector<double> token_logprobs;  // one per token, each <= 0

    void validate() const {
        if (tokens.size() != token_logprobs.size()) {
            throw BackendError("completion tokens and logprobs differ in length");
        }
        for (double lp : token_logprobs) {
            if (lp > 0.0) {
                throw BackendError("completion logprob > 0");
            }
        }
    }
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Completes a prompt. Deterministic backends (greedy decoding, fixed
    /// seed) make whole runs reproducible; nothing here enforces it.
    virtual CompletionResult complete(const std::string& prompt) = 0;
};

/// Deterministic mock backend driven by a rules file:
///
///   {
///     "rules": [
///       {"match": "substring of prompt", "value": "answer",
///        "token_probs": [0.9, 0.8]}
///     ],
///     "fallback": {"value": "unknown", "token_probs": [0.5]}
///   }
///
/// The first rule whose "match" occurs in the prompt wins. The completion
/// is the JSON answer object; its value is split into len(token_probs)
/// near-equal pieces so the value's tokens carry exactly the configured
/// probabilities, with scaffolding tokens at probability 1.
class RulesLlmBackend : public LlmBackend {
public:
    struct Rule {
        std::string match;  // empty = always matches (fallback)
        std::string value;
        std::vector<double> token_probs;
    };

    explicit RulesLlmBackend(std::vector<Rule> rules, Rule fallback = {"", "unknown", {0.5}})
        : rules_(std::move(rules)), fallback_(std::move(fallback)) {
        for (const auto& r : rules_) {
            check_rule(r);
        }
        check_rule(fallback_);
    }

    static RulesLlmBackend from_file(const std::filesystem::path& path) {
        const std::string content = read_text_file(path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(content);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), line_of_byte(content, e.byte), e.what());
        }
        std::vector<Rule> rules;
        if (j.contains("rules")) {
            for (const auto& jr : j.at("rules")) {
                rules.push_back(rule_from_json(jr));
            }
        }
        Rule fallback{"", "unknown", {0.5}};
        if (j.contains("fallback")) {
            fallback = rule_from_json(j.at("fallback"));
            fallback.match.clear();
        }
        return RulesLlmBackend(std::move(rules), std::move(fallback));
    }

    CompletionResult complete(const std::string& prompt) override {
        const Rule* hit = &fallback_;
        for (const auto& r : rules_) {
            if (!r.match.empty() && prompt.find(r.match) != std::string::npos) {
                hit = &r;
                break;
            }
        }
        return render(*hit);
    }

private:
    static void check_rule(const Rule& r) {
        if (r.token_probs.empty()) {
            throw ValidationError("rule for value \"" + r.value + "\" has no token_probs");
        }
        for (double p : r.token_probs) {
            if (!(p > 0.0) || p > 1.0) {
                throw ValidationError("rule token_probs must lie in (0,1]");
            }
        }
        if (r.token_probs.size() > std::max<std::size_t>(cp_length(r.value), 1)) {
            throw ValidationError("rule for value \"" + r.value +
                                  "\" has more token_probs than value characters");
        }
        for (char c : r.value) {
            if (c == '"' || c == '\\' || (c >= 0 && c < 0x20)) {
                throw ValidationError("rule value \"" + r.value +
                                      "\" may not contain quotes, backslashes, or control "
                                      "characters (it is spliced into a JSON literal)");
            }
        }
    }

    static Rule rule_from_json(const nlohmann::json& j) {
        Rule r;
        if (j.contains("match")) {
            r.match = j.at("match").get<std::string>();
        }
        r.value = j.at("value").get<std::string>();
        for (const auto& p : j.at("token_probs")) {
            r.token_probs.push_back(p.get<double>());
        }
        return r;
    }

    static CompletionResult render(const Rule& rule) {
        CompletionResult out;
        auto push = [&](const std::string& tok, double prob) {
            out.tokens.push_back(tok);
            out.token_logprobs.push_back(std::log(prob));
        };
        push("{\"re-identification\": \"", 1.0);
        const std::size_t n = cp_length(rule.value);
        const std::size_t k = rule.token_probs.size();
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t from = i * n / k;
            const std::size_t to = (i + 1) * n / k;
            push(cp_slice(rule.value, from, to), rule.token_probs[i]);
        }
        push("\"}", 1.0);
        for (const auto& t : out.tokens) {
            out.text += t;
        }
        out.validate();
        return out;
    }

    std::vector<Rule> rules_;
    Rule fallback_;
};

}  // namespace reident
