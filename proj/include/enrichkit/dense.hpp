#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "enrichkit/corpus.hpp"
#include "enrichkit/gateway.hpp"
#include "enrichkit/ranking.hpp"

namespace enrichkit {

/// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

using EmbeddingMap = std::unordered_map<std::string, EmbeddingVector>;

/// Reorders all candidates by cosine to the query (descending, doc_id ascending on
/// ties). Scores in the result are the cosines.
RankedList rerank(const RankedList& candidates, const EmbeddingVector& query_embedding, const EmbeddingMap& doc_embeddings);

/// Re-ranks the first m candidates; the rest keep their order and scores.
RankedList rerank_top_m(const RankedList& candidates, std::size_t m, const EmbeddingVector& query_embedding,
                        const EmbeddingMap& doc_embeddings);

/// (model_tag, content hash) -> vector. Safe for concurrent use.
class EmbeddingCache {
public:
    static constexpr int kFormatVersion = 1;

    EmbeddingCache() = default;
    EmbeddingCache(EmbeddingCache&& other) noexcept : entries_(std::move(other.entries_)) {}
    EmbeddingCache& operator=(EmbeddingCache&& other) noexcept {
        entries_ = std::move(other.entries_);
        return *this;
    }

    std::optional<EmbeddingVector> get(const std::string& model_tag, const std::string& content_hash) const;
    void put(const std::string& model_tag, const std::string& content_hash, EmbeddingVector vector);
    std::size_t size() const;

    /// JSONL: a header line {"format", "version"} then one
    /// {"model", "hash", "vector"} object per entry, sorted by key.
    void save(const std::filesystem::path& path) const;
    static EmbeddingCache load(const std::filesystem::path& path);

private:
    mutable std::shared_mutex mutex_;
    std::map<std::pair<std::string, std::string>, EmbeddingVector> entries_;
};

/// Fetches embeddings through the gateway in batches, consulting the cache first.
class DenseEncoder {
public:
    DenseEncoder(ModelGateway& gateway, EmbeddingCache& cache, std::string model_tag, std::size_t batch_size = 64)
        : gateway_(gateway), cache_(cache), model_tag_(std::move(model_tag)), batch_size_(batch_size) {}

    const std::string& model_tag() const { return model_tag_; }
    EmbeddingVector embed_text(const std::string& text);
    /// Embeds doc.index_text() for every listed doc id.
    EmbeddingMap embed_documents(const std::vector<const Document*>& docs);

    /// Re-ranks the top m of a BM25 list. m >= size means full re-ranking.
    RankedList rerank(const RankedList& candidates, const std::string& query_text, std::size_t m,
                      const std::function<const Document*(const std::string&)>& lookup);

private:
    std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts);

    ModelGateway& gateway_;
    EmbeddingCache& cache_;
    std::string model_tag_;
    std::size_t batch_size_;
};

}  // namespace enrichkit
