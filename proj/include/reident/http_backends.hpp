#pragma once

#include <atomic>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "reident/embeddings.hpp"
#include "reident/errors.hpp"
#include "reident/llm.hpp"

namespace reident {

namespace detail {

/// Splits "http://host:port/some/path" into the client base and the
/// request path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw ValidationError("endpoint is not a URL: " + url);
    }
    const std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

inline nlohmann::json post_json(const std::string& base, const std::string& path,
                                const nlohmann::json& body, const char* what) {
    httplib::Client client(base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(600, 0);
    httplib::Result res = client.Post(path, body.dump(), "application/json");
    if (!res) {
        throw BackendError(std::string(what) + " request to " + base + path +
                           " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw BackendError(std::string(what) + " request to " + base + path +
                           " returned status " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(std::string(what) + " response from " + base + path +
                           " is not JSON: " + e.what());
    }
}

}  // namespace detail

/// Token-level embeddings over HTTP:
///   POST {"text": str, "role": "query"|"document"}
///     -> {"tokens": [str], "vectors": [[float]]}
/// A fresh connection per request keeps the provider thread-safe.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
    explicit HttpEmbeddingProvider(const std::string& url) {
        std::tie(base_, path_) = detail::split_url(url);
    }

    TokenEmbeddings embed(const std::string& text, EmbedRole role) override {
        const nlohmann::json body = {{"text", text}, {"role", to_string(role)}};
        const nlohmann::json j = detail::post_json(base_, path_, body, "embedding");
        TokenEmbeddings out;
        try {
            out.tokens = j.at("tokens").get<std::vector<std::string>>();
            out.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("embedding response from " + base_ + path_ +
                               " has unexpected shape: " + e.what());
        }
        try {
            out.validate();
        } catch (const Error& e) {
            throw BackendError("embedding response from " + base_ + path_ +
                               " is invalid: " + e.what());
        }
        dim_.store(out.dim());
        return out;
    }

    std::size_t dim() const override { return dim_.load(); }

 private:
    std::string base_;
    std::string path_;
    std::atomic<std::size_t> dim_{0};  // discovered from the first response
};

/// Plain completion endpoint:
///   POST {"prompt": str, "max_tokens": int, "logprobs": true,
///         "temperature": 0}
///     -> {"text": str, "tokens": [str], "token_logprobs": [float]}
class HttpLlmBackend : public LlmBackend {
 public:
    explicit HttpLlmBackend(const std::string& url, int max_tokens = 256)
        : max_tokens_(max_tokens) {
        std::tie(base_, path_) = detail::split_url(url);
    }

    CompletionResult complete(const std::string& prompt) override {
        const nlohmann::json body = {
            {"prompt", prompt},
            {"max_tokens", max_tokens_},
            {"logprobs", true},
            {"temperature", 0},
        };
        const nlohmann::json j = detail::post_json(base_, path_, body, "llm");
        CompletionResult out;
        try {
            out.text = j.at("text").get<std::string>();
            out.tokens = j.at("tokens").get<std::vector<std::string>>();
            out.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("llm response from " + base_ + path_ +
                               " has unexpected shape: " + e.what());
        }
        try {
            out.validate();
        } catch (const Error& e) {
            throw BackendError("llm response from " + base_ + path_ +
                               " is invalid: " + e.what());
        }
        return out;
    }

 private:
    std::string base_;
    std::string path_;
    int max_tokens_;
};

/// Adapter for completion APIs shaped like
///   {"choices": [{"text": ..., "logprobs": {"tokens": [...],
///                                           "token_logprobs": [...]}}]}
/// Null logprobs (some servers emit one for the first token) count as 0.
class OpenAiLlmBackend : public LlmBackend {
 public:
    explicit OpenAiLlmBackend(const std::string& url, std::string model = "",
                              int max_tokens = 256)
        : model_(std::move(model)), max_tokens_(max_tokens) {
        std::tie(base_, path_) = detail::split_url(url);
    }

    CompletionResult complete(const std::string& prompt) override {
        nlohmann::json body = {
            {"prompt", prompt},
            {"max_tokens", max_tokens_},
            {"logprobs", 1},
            {"temperature", 0},
            {"echo", false},
        };
        if (!model_.empty()) {
            body["model"] = model_;
        }
        const nlohmann::json j = detail::post_json(base_, path_, body, "llm");
        CompletionResult out;
        try {
            const nlohmann::json& choice = j.at("choices").at(0);
            out.text = choice.at("text").get<std::string>();
            const nlohmann::json& lp = choice.at("logprobs");
            out.tokens = lp.at("tokens").get<std::vector<std::string>>();
            for (const auto& v : lp.at("token_logprobs")) {
                out.token_logprobs.push_back(v.is_null() ? 0.0 : v.get<double>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("llm response from " + base_ + path_ +
                               " has unexpected shape: " + e.what());
        }
        try {
            out.validate();
        } catch (const Error& e) {
            throw BackendError("llm response from " + base_ + path_ +
                               " is invalid: " + e.what());
        }
        return out;
    }

 private:
    std::string base_;
    std::string path_;
    std::string model_;
    int max_tokens_;
};

}  // namespace reident
