#include "enrichkit/dense.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "enrichkit/error.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::DimensionMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<ScoredDoc> cosine_sorted(std::span<const ScoredDoc> candidates, const EmbeddingVector& query,
                                     const EmbeddingMap& docs) {
    std::vector<ScoredDoc> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
        auto it = docs.find(c.doc_id);
        if (it == docs.end()) throw Error(ErrorCode::MissingEmbedding, c.doc_id);
        out.push_back(ScoredDoc{c.doc_id, cosine(query.values, it->second.values)});
    }
    sort_by_score(out);
    return out;
}

}  // namespace

RankedList rerank(const RankedList& candidates, const EmbeddingVector& query_embedding,
                  const EmbeddingMap& doc_embeddings) {
    return rerank_top_m(candidates, candidates.size(), query_embedding, doc_embeddings);
}

RankedList rerank_top_m(const RankedList& candidates, std::size_t m, const EmbeddingVector& query_embedding,
                        const EmbeddingMap& doc_embeddings) {
    if (m > candidates.size())
        throw Error(ErrorCode::InvalidArgument, "m=" + std::to_string(m) + " exceeds " +
                                                    std::to_string(candidates.size()) + " candidates");
    RankedList out{candidates.query_id, {}};
    std::span<const ScoredDoc> all(candidates.entries);
    out.entries = cosine_sorted(all.first(m), query_embedding, doc_embeddings);
    out.entries.insert(out.entries.end(), candidates.entries.begin() + static_cast<std::ptrdiff_t>(m),
                       candidates.entries.end());
    return out;
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& model_tag, const std::string& content_hash) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find({model_tag, content_hash});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::put(const std::string& model_tag, const std::string& content_hash, EmbeddingVector vector) {
    std::unique_lock lock(mutex_);
    entries_.insert_or_assign({model_tag, content_hash}, std::move(vector));
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << json{{"format", "enrichkit-embedding-cache"}, {"version", kFormatVersion}}.dump() << '\n';
    for (const auto& [key, v] : entries_)
        out << json{{"model", key.first}, {"hash", key.second}, {"vector", v.values}}.dump() << '\n';
}

EmbeddingCache EmbeddingCache::load(const std::filesystem::path& path) {
    EmbeddingCache cache;
    std::ifstream in(path, std::ios::binary);
    if (!in) return cache;
    std::string line;
    if (!std::getline(in, line)) return cache;
    auto header = json::parse(line);
    if (header.value("format", "") != "enrichkit-embedding-cache" || header.value("version", 0) != kFormatVersion)
        throw Error(ErrorCode::MalformedRecord, "unsupported embedding cache " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line);
        auto model = j.at("model").get<std::string>();
        cache.entries_.insert_or_assign({model, j.at("hash").get<std::string>()},
                                        EmbeddingVector{j.at("vector").get<std::vector<double>>(), model});
    }
    return cache;
}

std::vector<EmbeddingVector> DenseEncoder::embed_texts(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::string> hashes(texts.size());
    for (std::size_t i = 0; i < texts.size(); i++) {
        hashes[i] = sha256_hex(texts[i]);
        if (auto hit = cache_.get(model_tag_, hashes[i]))
            out[i] = std::move(*hit);
        else
            missing.push_back(i);
    }
    for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
        std::size_t end = std::min(missing.size(), start + batch_size_);
        std::vector<std::string> batch;
        for (std::size_t k = start; k < end; k++) batch.push_back(texts[missing[k]]);
        auto vectors = gateway_.embed(batch, model_tag_);
        for (std::size_t k = start; k < end; k++) {
            cache_.put(model_tag_, hashes[missing[k]], vectors[k - start]);
            out[missing[k]] = std::move(vectors[k - start]);
        }
    }
    return out;
}

EmbeddingVector DenseEncoder::embed_text(const std::string& text) {
    return embed_texts({text}).front();
}

EmbeddingMap DenseEncoder::embed_documents(const std::vector<const Document*>& docs) {
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const Document* d : docs) texts.push_back(d->index_text());
    auto vectors = embed_texts(texts);
    EmbeddingMap out;
    for (std::size_t i = 0; i < docs.size(); i++) out.emplace(docs[i]->doc_id, std::move(vectors[i]));
    return out;
}

RankedList DenseEncoder::rerank(const RankedList& candidates, const std::string& query_text, std::size_t m,
                                const std::function<const Document*(const std::string&)>& lookup) {
    m = std::min(m, candidates.size());
    std::vector<const Document*> docs;
    docs.reserve(m);
    for (std::size_t i = 0; i < m; i++) {
        const Document* d = lookup(candidates.entries[i].doc_id);
        if (!d) throw Error(ErrorCode::UnknownDocument, candidates.entries[i].doc_id);
        docs.push_back(d);
    }
    if (m == 0) return candidates;
    auto query = embed_text(query_text);
    return rerank_top_m(candidates, m, query, embed_documents(docs));
}

}  // namespace enrichkit
