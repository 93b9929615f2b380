#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "reident/chunking.hpp"
#include "reident/embeddings.hpp"
#include "reident/errors.hpp"

namespace reident {

struct ScoredChunk {
    Chunk chunk;
    double score = 0.0;
};

/// Late-interaction score: for each query token, the best dot product
/// against any chunk token, summed over query tokens. With unit rows each
/// term lies in [-1, 1], so the total lies in [-n_q, n_q].
inline double maxsim_score(const TokenEmbeddings& query, const TokenEmbeddings& chunk) {
    if (query.dim() != chunk.dim()) {
        throw ValidationError("maxsim dim mismatch: " + std::to_string(query.dim()) + " vs " +
                              std::to_string(chunk.dim()));
    }
    double total = 0.0;
    for (const auto& q : query.vectors) {
        double best = 0.0;
        bool have = false;
        for (const auto& c : chunk.vectors) {
            double dot = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                dot += q[i] * c[i];
            }
            if (!have || dot > best) {
                best = dot;
                have = true;
            }
        }
        total += best;
    }
    return total;
}

/// Score every chunk against the retrieval-mode context and keep the top k.
/// Ties broken by (source_doc_id, start) ascending for determinism.
inline std::vector<ScoredChunk> rerank(const std::vector<Chunk>& chunks,
                                       const LocalContext& context, EmbeddingProvider& provider,
                                       std::size_t k) {
    if (k == 0) {
        throw ValidationError("k must be >= 1");
    }
    const TokenEmbeddings query = provider.embed(context.text, EmbedRole::Query);
    std::vector<ScoredChunk> scored;
    scored.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        try {
            const TokenEmbeddings emb = provider.embed(chunk.text, EmbedRole::Document);
            scored.push_back({chunk, maxsim_score(query, emb)});
        } catch (const std::exception& e) {
            throw BackendError("embedding failed for chunk " + chunk.chunk_id + ": " + e.what());
        }
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        if (a.chunk.source_doc_id != b.chunk.source_doc_id) {
            return a.chunk.source_doc_id < b.chunk.source_doc_id;
        }
        return a.chunk.start < b.chunk.start;
    });
    if (scored.size() > k) {
        scored.resize(k);
    }
    return scored;
}

}  // namespace reident
