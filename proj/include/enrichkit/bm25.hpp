#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "enrichkit/corpus.hpp"
#include "enrichkit/ranking.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
    TokenizerOptions tokenizer;
};

struct Posting {
    std::uint32_t doc = 0;  // internal id
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

struct PostingList {
    std::string term;
    std::vector<Posting> postings;  // ascending internal id
};

struct IndexStats {
    std::size_t doc_count = 0;
    double avg_doc_len = 0.0;
    std::vector<std::uint32_t> doc_len;  // by internal id
};

/// In-memory inverted index with Okapi BM25 scoring. Internal ids follow doc_id
/// order, so they double as the tie-break key. Read-only after build; concurrent
/// searches are safe.
class InvertedIndex {
public:
    static InvertedIndex build(const CorpusView& view, Bm25Params params = {});
    static InvertedIndex build(std::vector<const Document*> docs, Bm25Params params = {});

    /// Top `depth` documents by BM25, ties broken by ascending doc_id. Documents
    /// sharing no term with the query are not returned. Throws
    /// EmptyQueryAfterStemming when the query has no tokens at all.
    RankedList search(std::string_view query, std::size_t depth, const std::string& query_id = "") const;

    /// BM25 contribution of one term occurrence pattern; exposed for diagnostics.
    double idf(std::size_t df) const;

    const IndexStats& stats() const { return stats_; }
    const Bm25Params& params() const { return params_; }
    const PostingList* postings(const std::string& term) const;
    std::size_t term_count() const { return lists_.size(); }
    const std::string& doc_id(std::uint32_t internal_id) const { return docs_[internal_id]->doc_id; }
    const Document& document(std::uint32_t internal_id) const { return *docs_[internal_id]; }
    std::optional<std::uint32_t> internal_id(const std::string& doc_id) const;
    const Document* find(const std::string& doc_id) const;

private:
    Bm25Params params_;
    std::vector<const Document*> docs_;
    std::unordered_map<std::string, std::uint32_t> id_lookup_;
    std::vector<PostingList> lists_;
    std::unordered_map<std::string, std::size_t> term_lookup_;
    IndexStats stats_;
};

inline RankedList bm25_search(const InvertedIndex& index, std::string_view query_text, std::size_t depth,
                              const std::string& query_id = "") {
    return index.search(query_text, depth, query_id);
}

}  // namespace enrichkit
