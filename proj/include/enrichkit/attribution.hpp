#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "enrichkit/bm25.hpp"
#include "enrichkit/corpus.hpp"
#include "enrichkit/faithfulness.hpp"
#include "enrichkit/gateway.hpp"
#include "enrichkit/rag.hpp"

namespace enrichkit {

/// Which corpus answers are generated from x which corpus attribution candidates
/// are drawn from.
enum class AttributionSetting { RagPlain_AttrPlain, RagEnriched_AttrPlain, RagPlain_AttrEnriched, RagEnriched_AttrEnriched };

inline constexpr AttributionSetting kAllSettings[] = {
    AttributionSetting::RagPlain_AttrPlain, AttributionSetting::RagEnriched_AttrPlain,
    AttributionSetting::RagPlain_AttrEnriched, AttributionSetting::RagEnriched_AttrEnriched};

std::string_view to_string(AttributionSetting setting);
bool rag_uses_enriched(AttributionSetting setting);
bool attribution_uses_enriched(AttributionSetting setting);

enum class AttributionRanker { Bm25, Bm25Nli };

std::string_view to_string(AttributionRanker ranker);
std::optional<AttributionRanker> parse_ranker(std::string_view name);

/// Attribution is strictly above this score.
inline constexpr double kAttributionThreshold = 0.5;

inline bool is_attributed(double score) {
    return score > kAttributionThreshold;
}

/// NLI hypothesis for attributing `answer` to a question: question + " " + answer.
std::string attribution_hypothesis(const std::string& question, const std::string& answer);

struct AttributionCase {
    std::string query_id;
    std::string answer_text;
    std::string candidate;  // empty when retrieval found nothing
    AttributionSetting setting = AttributionSetting::RagPlain_AttrPlain;
    double nli_score = 0.0;
    bool entailed = false;
    bool candidate_contains_answer = false;
    bool candidate_generated = false;
    std::optional<bool> acc_nogen;
};

void to_json(nlohmann::json& j, const AttributionCase& c);

/// Percentages over cases.
struct AttributionAggregate {
    double ca = 0.0;
    double acc = 0.0;
    std::optional<double> acc_nogen;
    std::size_t cases = 0;
};

/// Rank-1 BM25 document. Throws NoMatch when nothing matches.
std::string select_candidate_bm25(const InvertedIndex& index, const std::string& question);

/// Among the top `pool` BM25 docs, the one with the highest NLI score for
/// (doc text, question + answer); ties go to the smaller doc_id.
std::string select_candidate_bm25_nli(const InvertedIndex& index, const std::string& question, const std::string& answer,
                                      const NliFunction& nli, std::size_t pool = 50);

/// acc = % entailed, ca = % of candidates containing a gold answer; acc_nogen is
/// the % of cases whose acc_nogen flag is set, present only if every case has one.
AttributionAggregate entailment_accuracy(const std::vector<AttributionCase>& cases);

/// For a generated candidate, whether any of its source documents entails the
/// answer; the candidate's own text is never scored. For an original candidate,
/// the plain entailment flag.
bool acc_nogen(const Document& candidate, const Corpus& corpus, const std::string& question, const std::string& answer,
               const NliFunction& nli, bool candidate_entailed);

struct AttributionOptions {
    AttributionRanker ranker = AttributionRanker::Bm25;
    std::size_t pool = 50;
    RagOptions rag;
};

struct AttributionMatrixResult {
    std::map<AttributionSetting, AttributionAggregate> aggregates;
    std::vector<AttributionCase> cases;  // setting-major, query order
    RagResult rag_plain;
    RagResult rag_enriched;
};

/// Runs RAG over both views, then for every setting selects a candidate from the
/// setting's attribution view and scores it.
AttributionMatrixResult run_attribution_matrix(const std::vector<QueryRecord>& queries, const IndexProvider& plain_view,
                                               const IndexProvider& enriched_view, const Corpus& corpus,
                                               ModelGateway& gateway, const NliFunction& nli,
                                               const AttributionOptions& options);

}  // namespace enrichkit
