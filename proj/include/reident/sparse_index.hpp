#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "reident/corpus.hpp"
#include "reident/errors.hpp"
#include "reident/io.hpp"
#include "reident/tokenize.hpp"

namespace reident {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Inverted index with BM25 scoring. Immutable after build; queries are
/// thread-safe. The index stores document texts as well, so downstream
/// chunking needs only the index file, not the original corpus.
class SparseIndex {
public:
    [[nodiscard]] static SparseIndex build(const BackgroundCorpus& corpus, Bm25Params params = {}) {
        if (corpus.docs.empty()) {
            throw ValidationError("cannot build index from an empty corpus");
        }
        SparseIndex index;
        index.params_ = params;
        std::size_t total_len = 0;
        for (const auto& doc : corpus.docs) {
            const std::size_t doc_idx = index.doc_ids_.size();
            index.doc_ids_.push_back(doc.doc_id);
            index.doc_texts_.push_back(doc.text);
            index.doc_index_[doc.doc_id] = doc_idx;

            const std::vector<std::string> tokens = tokenize(doc.text);
            index.doc_lengths_.push_back(tokens.size());
            total_len += tokens.size();

            std::map<std::string, std::size_t> tf;
            for (const auto& t : tokens) {
                ++tf[t];
            }
            for (const auto& [term, count] : tf) {
                auto it = index.vocab_.find(term);
                if (it == index.vocab_.end()) {
                    it = index.vocab_.emplace(term, index.postings_.size()).first;
                    index.postings_.emplace_back();
                }
                index.postings_[it->second].emplace_back(doc_idx, count);
            }
        }
        index.avg_doc_length_ =
            static_cast<double>(total_len) / static_cast<double>(index.doc_ids_.size());
        for (auto& plist : index.postings_) {
            std::sort(plist.begin(), plist.end(),
                      [&](const auto& a, const auto& b) {
                          return index.doc_ids_[a.first] < index.doc_ids_[b.first];
                      });
        }
        return index;
    }

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }

    const std::string& doc_text(const std::string& doc_id) const {
        auto it = doc_index_.find(doc_id);
        if (it == doc_index_.end()) {
            throw ValidationError("unknown doc_id " + doc_id + " in index");
        }
        return doc_texts_[it->second];
    }

    std::size_t doc_length(const std::string& doc_id) const {
        auto it = doc_index_.find(doc_id);
        if (it == doc_index_.end()) {
            throw ValidationError("unknown doc_id " + doc_id + " in index");
        }
        return doc_lengths_[it->second];
    }

    /// BM25 ranking of every document sharing at least one term with the
    /// query, truncated to k. Score per query token occurrence:
    ///   idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * dl/avgdl))
    /// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Ties broken by
    /// doc_id ascending. An empty query yields an empty result.
    std::vector<ScoredDoc> query_topk(const std::string& query_text, std::size_t k) const {
        if (k == 0) {
            throw ValidationError("k must be >= 1");
        }
        const std::vector<std::string> terms = tokenize(query_text);
        std::vector<double> scores(doc_ids_.size(), 0.0);
        std::vector<char> matched(doc_ids_.size(), 0);
        const double n = static_cast<double>(doc_ids_.size());
        for (const auto& term : terms) {
            auto it = vocab_.find(term);
            if (it == vocab_.end()) {
                continue;
            }
            const auto& plist = postings_[it->second];
            const double df = static_cast<double>(plist.size());
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            for (const auto& [doc_idx, tf_count] : plist) {
                const double tf = static_cast<double>(tf_count);
                const double dl = static_cast<double>(doc_lengths_[doc_idx]);
                const double norm = 1.0 - params_.b + params_.b * dl / avg_doc_length_;
                scores[doc_idx] += idf * tf * (params_.k1 + 1.0) / (tf + params_.k1 * norm);
                matched[doc_idx] = 1;
            }
        }
        std::vector<ScoredDoc> result;
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
            if (matched[i]) {
                result.push_back({doc_ids_[i], scores[i]});
            }
        }
        std::sort(result.begin(), result.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            return a.doc_id < b.doc_id;
        });
        if (result.size() > k) {
            result.resize(k);
        }
        return result;
    }

    nlohmann::json to_json() const {
        nlohmann::json docs = nlohmann::json::array();
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
            docs.push_back({
                {"doc_id", doc_ids_[i]},
                {"length", doc_lengths_[i]},
                {"text", doc_texts_[i]},
            });
        }
        nlohmann::json terms = nlohmann::json::object();
        for (const auto& [term, term_id] : vocab_) {
            nlohmann::json plist = nlohmann::json::array();
            for (const auto& [doc_idx, tf] : postings_[term_id]) {
                plist.push_back(nlohmann::json::array({doc_ids_[doc_idx], tf}));
            }
            terms[term] = std::move(plist);
        }
        return nlohmann::json{
            {"avg_doc_length", avg_doc_length_},
            {"doc_count", doc_ids_.size()},
            {"docs", std::move(docs)},
            {"params", {{"b", params_.b}, {"k1", params_.k1}}},
            {"terms", std::move(terms)},
        };
    }

    [[nodiscard]] static SparseIndex from_json(const nlohmann::json& j) {
        SparseIndex index;
        index.params_.k1 = j.at("params").at("k1").get<double>();
        index.params_.b = j.at("params").at("b").get<double>();
        std::size_t total_len = 0;
        for (const auto& jd : j.at("docs")) {
            const std::size_t doc_idx = index.doc_ids_.size();
            index.doc_ids_.push_back(jd.at("doc_id").get<std::string>());
            index.doc_texts_.push_back(jd.at("text").get<std::string>());
            index.doc_lengths_.push_back(jd.at("length").get<std::size_t>());
            index.doc_index_[index.doc_ids_.back()] = doc_idx;
            total_len += index.doc_lengths_.back();
        }
        if (index.doc_ids_.empty()) {
            throw ValidationError("index file contains no documents");
        }
        if (j.at("doc_count").get<std::size_t>() != index.doc_ids_.size()) {
            throw ValidationError("index doc_count does not match docs array");
        }
        index.avg_doc_length_ =
            static_cast<double>(total_len) / static_cast<double>(index.doc_ids_.size());
        for (auto it = j.at("terms").begin(); it != j.at("terms").end(); ++it) {
            const std::size_t term_id = index.postings_.size();
            index.vocab_.emplace(it.key(), term_id);
            index.postings_.emplace_back();
            for (const auto& entry : it.value()) {
                const std::string doc_id = entry.at(0).get<std::string>();
                auto dit = index.doc_index_.find(doc_id);
                if (dit == index.doc_index_.end()) {
                    throw ValidationError("index posting references unknown doc_id " + doc_id);
                }
                index.postings_[term_id].emplace_back(dit->second, entry.at(1).get<std::size_t>());
            }
        }
        return index;
    }

    void save(const std::filesystem::path& path) const {
        write_text_file(path, to_json().dump(2) + "\n");
    }

    [[nodiscard]] static SparseIndex load(const std::filesystem::path& path) {
        const std::string content = read_text_file(path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(content);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), line_of_byte(content, e.byte), e.what());
        }
        return from_json(j);
    }

private:
    Bm25Params params_;
    std::vector<std::string> doc_ids_;      // corpus order
    std::vector<std::string> doc_texts_;    // corpus order
    std::vector<std::size_t> doc_lengths_;  // token counts, corpus order
    std::map<std::string, std::size_t> doc_index_;
    double avg_doc_length_ = 0.0;
    std::map<std::string, std::size_t> vocab_;  // term -> postings_ slot
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> postings_;  // (doc idx, tf)
};

}  // namespace reident
