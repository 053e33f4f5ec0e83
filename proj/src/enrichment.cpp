#include "enrichkit/enrichment.hpp"

#include <algorithm>
#include <mutex>

#include "enrichkit/error.hpp"
#include "enrichkit/parallel.hpp"
#include "enrichkit/random.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

namespace {

constexpr std::string_view kZeroShotPrompt =
    "You are a content provider. Write a document that has relevant information to the need induced by a given "
    "query. Write it as a short paragraph. You must remain truthful, while also making sure your paragraph would be "
    "ranked higher than other paragraphs of the same topic. Write a short paragraph that satisfies the information "
    "need induced by the query: ";

constexpr std::string_view kModificationPrompt =
    "Rewrite a given document, according to a given query. Do not add new knowledge not present in the document. "
    "It should be similar to the original, and should answer the query. Write it in a paragraph form. Rewrite "
    "according to the query: ";

constexpr std::string_view kSummaryPrompt =
    "Your task is abstractive summarization of given documents, according to a given query. You may only use the "
    "information given to you. Do not add knowledge not present in the documents. Write it in a paragraph form. "
    "Summarize only the relevant information as induced by the following query: ";

}  // namespace

GenerationRequest GenerationRequest::make(Method method, QueryRecord query, std::vector<Document> source_docs,
                                          std::string model_tag, double temperature) {
    GenerationRequest r{method, std::move(query), std::move(source_docs), std::move(model_tag), temperature};
    r.validate();
    return r;
}

void GenerationRequest::validate() const {
    if (source_docs.size() != method_arity(method))
        throw Error(ErrorCode::ArityMismatch, std::string(method_name(method)) + " takes " +
                                                  std::to_string(method_arity(method)) + " documents, got " +
                                                  std::to_string(source_docs.size()));
}

void LengthPolicy::validate() const {
    if (min_words > max_words) throw Error(ErrorCode::InvalidArgument, "min_words > max_words");
}

std::string build_prompt(const GenerationRequest& request) {
    request.validate();
    std::string prompt;
    switch (request.method) {
        case Method::ZS: prompt = kZeroShotPrompt; break;
        case Method::DM: prompt = kModificationPrompt; break;
        case Method::TwoDS:
        case Method::TwoDSR:
        case Method::ThreeDS: prompt = kSummaryPrompt; break;
    }
    prompt += request.query.text;
    for (const auto& doc : request.source_docs) {
        prompt += ' ';
        prompt += doc.index_text();
    }
    return prompt;
}

std::vector<std::string> select_source_docs_adhoc(const RankedList& ranked, const QueryRecord& query, std::size_t need,
                                                  std::uint64_t seed, std::size_t depth, std::size_t group_size) {
    if (need == 0) return {};
    if (group_size == 0) throw Error(ErrorCode::InvalidArgument, "group_size must be >= 1");
    Rng rng(seed);
    std::vector<std::string> selected;
    std::size_t limit = std::min(depth, ranked.size());
    for (std::size_t start = 0; start < limit && selected.size() < need; start += group_size) {
        std::vector<const std::string*> relevant;
        for (std::size_t i = start; i < std::min(limit, start + group_size); i++)
            if (query.is_relevant(ranked.entries[i].doc_id)) relevant.push_back(&ranked.entries[i].doc_id);
        if (relevant.empty()) continue;
        selected.push_back(*relevant[uniform_index(rng, relevant.size())]);
    }

    std::vector<std::string> remaining;
    for (auto& id : query.relevant_ids())
        if (std::find(selected.begin(), selected.end(), id) == selected.end()) remaining.push_back(std::move(id));
    if (selected.size() + remaining.size() < need)
        throw Error(ErrorCode::InsufficientRelevant, query.query_id + ": need " + std::to_string(need) + ", have " +
                                                         std::to_string(selected.size() + remaining.size()));
    // Partial Fisher-Yates over the leftover relevant docs.
    for (std::size_t i = 0; selected.size() < need; i++) {
        std::size_t j = i + uniform_index(rng, remaining.size() - i);
        std::swap(remaining[i], remaining[j]);
        selected.push_back(remaining[i]);
    }
    return selected;
}

RagSourceSelection select_source_docs_rag(const RankedList& ranked, const Corpus& corpus,
                                          const std::vector<std::string>& answers, std::size_t need,
                                          AnswerMatchMode match, std::size_t first_rank, std::size_t last_rank) {
    RagSourceSelection out;
    for (std::size_t rank = std::max<std::size_t>(first_rank, 1); rank <= last_rank && rank <= ranked.size() &&
                                                                  out.doc_ids.size() < need;
         rank++) {
        const auto& id = ranked.entries[rank - 1].doc_id;
        const Document* doc = corpus.find(id);
        if (doc && answer_is_correct(doc->index_text(), answers, match)) out.doc_ids.push_back(id);
    }
    out.insufficient = out.doc_ids.size() < need;
    return out;
}

std::string select_random_partner(const RankedList& ranked, const std::set<std::string>& excluded, std::uint64_t seed,
                                  std::size_t first_rank, std::size_t last_rank) {
    std::vector<const std::string*> eligible;
    for (std::size_t rank = std::max<std::size_t>(first_rank, 1); rank <= last_rank && rank <= ranked.size(); rank++) {
        const auto& id = ranked.entries[rank - 1].doc_id;
        if (!excluded.contains(id)) eligible.push_back(&id);
    }
    if (eligible.empty()) throw Error(ErrorCode::NoEligiblePartner, ranked.query_id);
    Rng rng(seed);
    return *eligible[uniform_index(rng, eligible.size())];
}

std::string_view to_string(GenerationStatus status) {
    switch (status) {
        case GenerationStatus::Generated: return "generated";
        case GenerationStatus::Discarded: return "discarded";
        case GenerationStatus::Insufficient: return "insufficient";
        case GenerationStatus::Failed: return "failed";
    }
    return "?";
}

std::string generated_doc_id(Method method, const std::string& model_tag, const std::string& query_id) {
    return "gen-" + std::string(method_name(method)) + "-" + model_tag + "-" + query_id;
}

GenerationOutcome generate_document(const GenerationRequest& request, const LengthPolicy& policy,
                                    ModelGateway& gateway, int max_attempts, int max_tokens) {
    policy.validate();
    const std::string prompt = build_prompt(request);
    GenerationOutcome outcome;
    std::string text;
    for (outcome.attempts = 1;; outcome.attempts++) {
        try {
            text = gateway.generate(prompt, request.temperature, max_tokens);
            break;
        } catch (const Error& e) {
            if (!e.is_backend()) throw;
            if (outcome.attempts >= max_attempts) {
                outcome.status = GenerationStatus::Failed;
                outcome.reason = e.what();
                return outcome;
            }
        }
    }

    if (policy.mode == LengthMode::TruncateAndDiscard) {
        auto words = split_words(text);
        if (words.size() < policy.min_words) {
            outcome.status = GenerationStatus::Discarded;
            outcome.reason = std::to_string(words.size()) + " words < " + std::to_string(policy.min_words);
            return outcome;
        }
        if (words.size() > policy.max_words) text = join_words(words, 0, policy.max_words);
    }
    if (normalize_whitespace(text).empty()) {
        outcome.status = GenerationStatus::Discarded;
        outcome.reason = "empty generation";
        return outcome;
    }

    std::vector<std::string> sources;
    for (const auto& d : request.source_docs) sources.push_back(d.doc_id);
    Document doc;
    doc.doc_id = generated_doc_id(request.method, request.model_tag, request.query.query_id);
    doc.text = std::move(text);
    doc.provenance = Provenance::generated(request.method, request.model_tag, request.query.query_id, std::move(sources));
    outcome.status = GenerationStatus::Generated;
    outcome.document = std::move(doc);
    return outcome;
}

std::size_t EnrichmentResult::failures() const {
    return static_cast<std::size_t>(std::count_if(statuses.begin(), statuses.end(), [](const auto& s) {
        return s.status == GenerationStatus::Failed;
    }));
}

json EnrichmentResult::manifest(const EnrichmentConfig& config) const {
    json per_query = json::array();
    for (const auto& s : statuses) {
        json row{{"query_id", s.query_id}, {"status", to_string(s.status)}, {"source_doc_ids", s.source_doc_ids}};
        if (!s.reason.empty()) row["reason"] = s.reason;
        if (s.doc_id) row["doc_id"] = *s.doc_id;
        per_query.push_back(std::move(row));
    }
    return json{{"method", method_name(config.method)},
                {"model_tag", config.model_tag},
                {"seed", config.seed},
                {"selection", config.selection == SelectionMode::AdHoc ? "adhoc" : "rag"},
                {"policy",
                 {{"mode", config.policy.mode == LengthMode::Off ? "off" : "truncate_and_discard"},
                  {"max_words", config.policy.max_words},
                  {"min_words", config.policy.min_words}}},
                {"queries", std::move(per_query)}};
}

namespace {

// Qrels restricted to docs that exist in the corpus.
QueryRecord with_known_docs(const QueryRecord& q, const Corpus& corpus) {
    QueryRecord out = q;
    std::erase_if(out.qrels, [&](const auto& kv) { return corpus.find(kv.first) == nullptr; });
    return out;
}

struct Selection {
    std::vector<std::string> ids;
    std::string insufficient_reason;
};

Selection select_sources(const Corpus& corpus, const QueryRecord& q, const RankedList& ranked,
                         const EnrichmentConfig& config) {
    Selection sel;
    const std::size_t arity = method_arity(config.method);
    if (arity == 0) return sel;
    const std::uint64_t seed = derive_seed(config.seed, q.query_id);
    const std::uint64_t partner_seed = derive_seed(config.seed, q.query_id + "/partner");
    const bool with_partner = config.method == Method::TwoDSR;
    const std::size_t need = with_partner ? 1 : arity;

    if (config.selection == SelectionMode::AdHoc) {
        try {
            sel.ids = select_source_docs_adhoc(ranked, q, need, seed, config.candidate_depth);
            if (with_partner) {
                auto rel = q.relevant_ids();
                sel.ids.push_back(select_random_partner(ranked, std::set<std::string>(rel.begin(), rel.end()),
                                                        partner_seed, 1, config.candidate_depth));
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientRelevant && e.code() != ErrorCode::NoEligiblePartner) throw;
            sel.ids.clear();
            sel.insufficient_reason = e.what();
        }
        return sel;
    }

    auto found = select_source_docs_rag(ranked, corpus, q.gold_answers, need, config.match, 6, config.candidate_depth);
    if (found.insufficient) {
        sel.insufficient_reason = "fewer than " + std::to_string(need) + " answer-bearing docs at ranks 6.." +
                                  std::to_string(config.candidate_depth);
        return sel;
    }
    sel.ids = std::move(found.doc_ids);
    if (with_partner) {
        std::set<std::string> containing;
        for (std::size_t r = 6; r <= std::min(config.candidate_depth, ranked.size()); r++) {
            const auto& id = ranked.entries[r - 1].doc_id;
            const Document* doc = corpus.find(id);
            if (doc && answer_is_correct(doc->index_text(), q.gold_answers, config.match)) containing.insert(id);
        }
        try {
            sel.ids.push_back(select_random_partner(ranked, containing, partner_seed, 6, config.candidate_depth));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoEligiblePartner) throw;
            sel.ids.clear();
            sel.insufficient_reason = e.what();
        }
    }
    return sel;
}

}  // namespace

EnrichmentResult enrich_corpus(const Corpus& corpus, const QuerySet& queries, const InvertedIndex& index,
                               const EnrichmentConfig& config, ModelGateway& gateway) {
    config.policy.validate();
    const auto& records = queries.records();
    std::vector<QueryGenerationStatus> statuses(records.size());
    std::vector<std::optional<Document>> docs(records.size());

    parallel_for(records.size(), config.workers, [&](std::size_t i) {
        const QueryRecord q = with_known_docs(records[i], corpus);
        auto& status = statuses[i];
        status.query_id = q.query_id;

        RankedList ranked{q.query_id, {}};
        if (method_arity(config.method) > 0) {
            try {
                ranked = index.search(q.text, config.candidate_depth, q.query_id);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyQueryAfterStemming) throw;
            }
        }
        auto sel = select_sources(corpus, q, ranked, config);
        if (!sel.insufficient_reason.empty()) {
            status.status = GenerationStatus::Insufficient;
            status.reason = sel.insufficient_reason;
            return;
        }
        std::vector<Document> sources;
        for (const auto& id : sel.ids) sources.push_back(corpus.at(id));
        status.source_doc_ids = sel.ids;
        auto request = GenerationRequest::make(config.method, q, std::move(sources), config.model_tag);
        auto outcome = generate_document(request, config.policy, gateway, config.max_attempts, config.max_tokens);
        status.status = outcome.status;
        status.reason = outcome.reason;
        if (outcome.document) {
            status.doc_id = outcome.document->doc_id;
            docs[i] = std::move(outcome.document);
        }
    });

    EnrichmentResult result;
    result.statuses = std::move(statuses);
    for (auto& d : docs)
        if (d) result.generated.push_back(std::move(*d));
    return result;
}

}  // namespace enrichkit
