#include "enrichkit/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "enrichkit/error.hpp"

namespace enrichkit {

InvertedIndex InvertedIndex::build(const CorpusView& view, Bm25Params params) {
    return build(view.documents(), params);
}

InvertedIndex InvertedIndex::build(std::vector<const Document*> docs, Bm25Params params) {
    if (docs.empty()) throw Error(ErrorCode::EmptyView, "no documents to index");
    std::sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });

    InvertedIndex index;
    index.params_ = params;
    index.docs_ = std::move(docs);
    index.stats_.doc_count = index.docs_.size();
    index.stats_.doc_len.resize(index.docs_.size());

    double total_len = 0.0;
    std::map<std::string, std::uint32_t> tf;
    for (std::uint32_t id = 0; id < index.docs_.size(); id++) {
        const Document& doc = *index.docs_[id];
        if (!index.id_lookup_.emplace(doc.doc_id, id).second) throw Error(ErrorCode::DuplicateId, doc.doc_id);
        auto tokens = tokenize_and_stem(doc.index_text(), params.tokenizer);
        index.stats_.doc_len[id] = static_cast<std::uint32_t>(tokens.size());
        total_len += static_cast<double>(tokens.size());
        tf.clear();
        for (auto& t : tokens) tf[t]++;
        for (const auto& [term, count] : tf) {
            auto [it, inserted] = index.term_lookup_.emplace(term, index.lists_.size());
            if (inserted) index.lists_.push_back(PostingList{term, {}});
            index.lists_[it->second].postings.push_back(Posting{id, count});
        }
    }
    index.stats_.avg_doc_len = total_len / static_cast<double>(index.stats_.doc_count);
    return index;
}

double InvertedIndex::idf(std::size_t df) const {
    double n = static_cast<double>(stats_.doc_count);
    double d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

const PostingList* InvertedIndex::postings(const std::string& term) const {
    auto it = term_lookup_.find(term);
    return it == term_lookup_.end() ? nullptr : &lists_[it->second];
}

std::optional<std::uint32_t> InvertedIndex::internal_id(const std::string& doc_id) const {
    auto it = id_lookup_.find(doc_id);
    if (it == id_lookup_.end()) return std::nullopt;
    return it->second;
}

const Document* InvertedIndex::find(const std::string& doc_id) const {
    auto id = internal_id(doc_id);
    return id ? docs_[*id] : nullptr;
}

RankedList InvertedIndex::search(std::string_view query, std::size_t depth, const std::string& query_id) const {
    if (depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 1");
    auto tokens = tokenize_and_stem(query, params_.tokenizer);
    if (tokens.empty()) throw Error(ErrorCode::EmptyQueryAfterStemming, std::string(query));

    // Repeated query terms contribute once per occurrence.
    std::map<std::string, int> qtf;
    for (auto& t : tokens) qtf[t]++;

    const double k1 = params_.k1;
    const double b = params_.b;
    const double avgdl = stats_.avg_doc_len;
    std::vector<double> acc(docs_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& [term, count] : qtf) {
        const PostingList* list = postings(term);
        if (!list) continue;
        double w = idf(list->postings.size()) * count;
        for (const auto& p : list->postings) {
            double tf = p.tf;
            double norm = k1 * (1.0 - b + b * stats_.doc_len[p.doc] / avgdl);
            if (acc[p.doc] == 0.0) touched.push_back(p.doc);
            acc[p.doc] += w * tf * (k1 + 1.0) / (tf + norm);
        }
    }

    // Internal ids are in doc_id order, so comparing them is the doc_id tie-break.
    auto better = [&](std::uint32_t a, std::uint32_t c) {
        if (acc[a] != acc[c]) return acc[a] > acc[c];
        return a < c;
    };
    std::size_t n = std::min(depth, touched.size());
    std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(n), touched.end(), better);

    RankedList out{query_id, {}};
    out.entries.reserve(n);
    for (std::size_t i = 0; i < n; i++) out.entries.push_back(ScoredDoc{docs_[touched[i]]->doc_id, acc[touched[i]]});
    return out;
}

}  // namespace enrichkit
