#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "reident/errors.hpp"
#include "reident/llm.hpp"

namespace testsupport {

inline reident::CompletionResult plain_completion(const std::string& text) {
    reident::CompletionResult out;
    out.text = text;
    out.tokens = {text};
    out.token_logprobs = {0.0};
    return out;
}

/// Completion shaped like the rules backend: JSON answer object with the
/// value split into one token per probability.
inline reident::CompletionResult answer_completion(const std::string& value,
                                                   const std::vector<double>& probs) {
    reident::CompletionResult out;
    auto push = [&](const std::string& tok, double p) {
        out.tokens.push_back(tok);
        out.token_logprobs.push_back(std::log(p));
        out.text += tok;
    };
    push("{\"re-identification\": \"", 1.0);
    const std::size_t n = value.size();
    const std::size_t k = probs.empty() ? 1 : probs.size();
    for (std::size_t i = 0; i < k; ++i) {
        push(value.substr(i * n / k, (i + 1) * n / k - i * n / k),
             probs.empty() ? 1.0 : probs[i]);
    }
    push("\"}", 1.0);
    return out;
}

/// Backend driven either by a response function or by a queue of one-shot
/// handlers; every prompt seen is recorded.
class ScriptedLlmBackend : public reident::LlmBackend {
 public:
    using Responder = std::function<reident::CompletionResult(const std::string&)>;

    ScriptedLlmBackend() = default;
    explicit ScriptedLlmBackend(Responder fn) : fn_(std::move(fn)) {}

    void enqueue(Responder fn) { queue_.push_back(std::move(fn)); }
    void enqueue_text(const std::string& text) {
        enqueue([text](const std::string&) { return plain_completion(text); });
    }
    void enqueue_answer(const std::string& value, const std::vector<double>& probs) {
        enqueue([value, probs](const std::string&) {
            return answer_completion(value, probs);
        });
    }
    void enqueue_error(const std::string& message) {
        enqueue([message](const std::string&) -> reident::CompletionResult {
            throw reident::BackendError(message);
        });
    }

    reident::CompletionResult complete(const std::string& prompt) override {
        prompts.push_back(prompt);
        if (!queue_.empty()) {
            Responder fn = std::move(queue_.front());
            queue_.pop_front();
            return fn(prompt);
        }
        if (fn_) {
            return fn_(prompt);
        }
        throw reident::BackendError("scripted backend has no response queued");
    }

    std::vector<std::string> prompts;

 private:
    Responder fn_;
    std::deque<Responder> queue_;
};

}  // namespace testsupport
