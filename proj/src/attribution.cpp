#include "enrichkit/attribution.hpp"

#include "enrichkit/error.hpp"

namespace enrichkit {

using nlohmann::json;

std::string_view to_string(AttributionSetting setting) {
    switch (setting) {
        case AttributionSetting::RagPlain_AttrPlain: return "rag_plain/attr_plain";
        case AttributionSetting::RagEnriched_AttrPlain: return "rag_enriched/attr_plain";
        case AttributionSetting::RagPlain_AttrEnriched: return "rag_plain/attr_enriched";
        case AttributionSetting::RagEnriched_AttrEnriched: return "rag_enriched/attr_enriched";
    }
    return "?";
}

bool rag_uses_enriched(AttributionSetting setting) {
    return setting == AttributionSetting::RagEnriched_AttrPlain || setting == AttributionSetting::RagEnriched_AttrEnriched;
}

bool attribution_uses_enriched(AttributionSetting setting) {
    return setting == AttributionSetting::RagPlain_AttrEnriched || setting == AttributionSetting::RagEnriched_AttrEnriched;
}

std::string_view to_string(AttributionRanker ranker) {
    return ranker == AttributionRanker::Bm25 ? "bm25" : "bm25+nli";
}

std::optional<AttributionRanker> parse_ranker(std::string_view name) {
    if (name == "bm25") return AttributionRanker::Bm25;
    if (name == "bm25+nli" || name == "bm25_nli") return AttributionRanker::Bm25Nli;
    return std::nullopt;
}

std::string attribution_hypothesis(const std::string& question, const std::string& answer) {
    return question + " " + answer;
}

void to_json(json& j, const AttributionCase& c) {
    j = json{{"query_id", c.query_id},
             {"setting", to_string(c.setting)},
             {"answer", c.answer_text},
             {"candidate", c.candidate},
             {"nli_score", c.nli_score},
             {"entailed", c.entailed},
             {"candidate_contains_answer", c.candidate_contains_answer},
             {"candidate_generated", c.candidate_generated}};
    if (c.acc_nogen) j["acc_nogen"] = *c.acc_nogen;
}

std::string select_candidate_bm25(const InvertedIndex& index, const std::string& question) {
    RankedList top;
    try {
        top = index.search(question, 1);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyQueryAfterStemming) throw Error(ErrorCode::NoMatch, question);
        throw;
    }
    if (top.empty()) throw Error(ErrorCode::NoMatch, question);
    return top.entries.front().doc_id;
}

std::string select_candidate_bm25_nli(const InvertedIndex& index, const std::string& question, const std::string& answer,
                                      const NliFunction& nli, std::size_t pool) {
    if (pool == 0) throw Error(ErrorCode::InvalidArgument, "pool must be >= 1");
    RankedList top;
    try {
        top = index.search(question, pool);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyQueryAfterStemming) throw Error(ErrorCode::NoMatch, question);
        throw;
    }
    if (top.empty()) throw Error(ErrorCode::NoMatch, question);
    const std::string hypothesis = attribution_hypothesis(question, answer);
    const std::string* best = nullptr;
    double best_score = -1.0;
    for (const auto& e : top.entries) {
        double s = 0.0;
        try {
            s = nli(index.find(e.doc_id)->index_text(), hypothesis);
        } catch (const Error& err) {
            if (err.is_backend()) throw Error(ErrorCode::NliBackendError, err.what());
            throw;
        }
        if (s > best_score || (s == best_score && e.doc_id < *best)) {
            best_score = s;
            best = &e.doc_id;
        }
    }
    return *best;
}

AttributionAggregate entailment_accuracy(const std::vector<AttributionCase>& cases) {
    AttributionAggregate agg;
    agg.cases = cases.size();
    if (cases.empty()) return agg;
    std::size_t entailed = 0, contains = 0, nogen = 0;
    bool all_nogen = true;
    for (const auto& c : cases) {
        entailed += c.entailed ? 1 : 0;
        contains += c.candidate_contains_answer ? 1 : 0;
        if (c.acc_nogen)
            nogen += *c.acc_nogen ? 1 : 0;
        else
            all_nogen = false;
    }
    const double n = static_cast<double>(cases.size());
    agg.acc = 100.0 * static_cast<double>(entailed) / n;
    agg.ca = 100.0 * static_cast<double>(contains) / n;
    if (all_nogen) agg.acc_nogen = 100.0 * static_cast<double>(nogen) / n;
    return agg;
}

bool acc_nogen(const Document& candidate, const Corpus& corpus, const std::string& question, const std::string& answer,
               const NliFunction& nli, bool candidate_entailed) {
    if (!candidate.is_generated()) return candidate_entailed;
    if (candidate.provenance.source_doc_ids.empty()) throw Error(ErrorCode::MissingProvenance, candidate.doc_id);
    const std::string hypothesis = attribution_hypothesis(question, answer);
    double best = 0.0;
    for (const auto& id : candidate.provenance.source_doc_ids) {
        const Document* source = corpus.find(id);
        if (!source) throw Error(ErrorCode::MissingProvenance, candidate.doc_id + " source " + id);
        best = std::max(best, nli(source->index_text(), hypothesis));
    }
    return is_attributed(best);
}

AttributionMatrixResult run_attribution_matrix(const std::vector<QueryRecord>& queries, const IndexProvider& plain_view,
                                               const IndexProvider& enriched_view, const Corpus& corpus,
                                               ModelGateway& gateway, const NliFunction& nli,
                                               const AttributionOptions& options) {
    AttributionMatrixResult result;
    RagOptions rag = options.rag;
    rag.with_retrieval = true;
    result.rag_plain = run_rag(queries, plain_view, gateway, rag);
    result.rag_enriched = run_rag(queries, enriched_view, gateway, rag);

    std::vector<std::shared_ptr<const InvertedIndex>> plain_idx, enriched_idx;
    for (const auto& q : queries) {
        plain_idx.push_back(plain_view(q));
        enriched_idx.push_back(enriched_view(q));
    }

    for (AttributionSetting setting : kAllSettings) {
        std::vector<AttributionCase> cases;
        const auto& runs = rag_uses_enriched(setting) ? result.rag_enriched.runs : result.rag_plain.runs;
        const bool enriched_attr = attribution_uses_enriched(setting);
        for (std::size_t i = 0; i < queries.size(); i++) {
            const QueryRecord& q = queries[i];
            const InvertedIndex& index = enriched_attr ? *enriched_idx[i] : *plain_idx[i];
            AttributionCase c;
            c.query_id = q.query_id;
            c.setting = setting;
            c.answer_text = runs[i].answer_text;
            try {
                c.candidate = options.ranker == AttributionRanker::Bm25
                                  ? select_candidate_bm25(index, q.text)
                                  : select_candidate_bm25_nli(index, q.text, c.answer_text, nli, options.pool);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoMatch) throw;
            }
            if (!c.candidate.empty()) {
                const Document& doc = *index.find(c.candidate);
                c.candidate_generated = doc.is_generated();
                c.candidate_contains_answer = answer_is_correct(doc.index_text(), q.gold_answers, options.rag.match);
                c.nli_score = nli(doc.index_text(), attribution_hypothesis(q.text, c.answer_text));
                c.entailed = is_attributed(c.nli_score);
                if (enriched_attr) c.acc_nogen = acc_nogen(doc, corpus, q.text, c.answer_text, nli, c.entailed);
            } else if (enriched_attr) {
                c.acc_nogen = false;
            }
            cases.push_back(std::move(c));
        }
        result.aggregates[setting] = entailment_accuracy(cases);
        result.cases.insert(result.cases.end(), cases.begin(), cases.end());
    }
    return result;
}

}  // namespace enrichkit
