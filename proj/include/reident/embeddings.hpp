#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "reident/errors.hpp"
#include "reident/hashing.hpp"
#include "reident/tokenize.hpp"

namespace reident {

enum class EmbedRole { Query, Document };

inline const char* to_string(EmbedRole r) {
    return r == EmbedRole::Query ? "query" : "document";
}

/// Per-token embeddings with unit-normalized rows. validate() is the
/// enforcement point for every provider implementation.
struct TokenEmbeddings {
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> vectors;  // tokens.size() x dim

    std::size_t dim() const { return vectors.empty() ? 0 : vectors[0].size(); }

    void validate() const {
        if (tokens.empty() || vectors.size() != tokens.size()) {
            throw ValidationError("token embeddings need >= 1 token and one vector per token");
        }
        const std::size_t d = vectors[0].size();
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].size() != d) {
                throw ValidationError("embedding rows have inconsistent dimensions");
            }
            double norm2 = 0.0;
            for (double x : vectors[i]) {
                norm2 += x * x;
            }
            const double norm = std::sqrt(norm2);
            if (norm < 1.0 - 1e-6 || norm > 1.0 + 1e-6) {
                throw ValidationError("embedding row " + std::to_string(i) +
                                      " is not unit-normalized (|v| = " + std::to_string(norm) +
                                      ")");
            }
        }
    }
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// Deterministic for identical (text, role). Rows unit-normalized.
    virtual TokenEmbeddings embed(const std::string& text, EmbedRole role) = 0;

    virtual std::size_t dim() const = 0;

    /// Providers that cannot take concurrent requests return true.
    virtual bool serial_only() const { return false; }
};

/// Deterministic stand-in for a real embedding service: each token maps to
/// a pseudo-random unit vector seeded from its hash, so equal tokens match
/// perfectly and distinct tokens are near-orthogonal at moderate dims.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 16, std::uint64_t seed = 0)
        : dim_(dim), seed_(seed) {
        if (dim_ == 0) {
            throw ValidationError("embedding dim must be >= 1");
        }
    }

    TokenEmbeddings embed(const std::string& text, EmbedRole) override {
        TokenEmbeddings out;
        out.tokens = tokenize(text);
        if (out.tokens.empty()) {
            out.tokens.push_back("");
        }
        for (const auto& tok : out.tokens) {
            out.vectors.push_back(token_vector(tok));
        }
        out.validate();
        return out;
    }

    std::size_t dim() const override { return dim_; }

private:
    std::vector<double> token_vector(const std::string& tok) const {
        SplitMix64 rng(fnv1a64(tok) ^ (seed_ * 0x9E3779B97F4A7C15ULL + 0x1234567ULL));
        std::vector<double> v(dim_);
        double norm2 = 0.0;
        for (auto& x : v) {
            x = rng.next_signed_unit();
            norm2 += x * x;
        }
        if (norm2 < 1e-24) {
            v[0] = 1.0;
            norm2 = 1.0;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& x : v) {
            x *= inv;
        }
        return v;
    }

    std::size_t dim_;
    std::uint64_t seed_;
};

/// Memoizing decorator: one embed call per distinct (role, text) per run.
class CachingEmbeddingProvider : public EmbeddingProvider {
public:
    explicit CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner)
        : inner_(std::move(inner)) {}

    TokenEmbeddings embed(const std::string& text, EmbedRole role) override {
        const std::pair<int, std::string> key{static_cast<int>(role), text};
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                ++hits_;
                return it->second;
            }
            ++misses_;
        }
        TokenEmbeddings fresh = inner_->embed(text, role);
        std::lock_guard<std::mutex> lock(mu_);
        cache_.emplace(key, fresh);
        return fresh;
    }

    std::size_t dim() const override { return inner_->dim(); }
    bool serial_only() const override { return inner_->serial_only(); }

    std::size_t hits() const {
        std::lock_guard<std::mutex> lock(mu_);
        return hits_;
    }
    std::size_t misses() const {
        std::lock_guard<std::mutex> lock(mu_);
        return misses_;
    }

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    mutable std::mutex mu_;
    std::map<std::pair<int, std::string>, TokenEmbeddings> cache_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace reident
