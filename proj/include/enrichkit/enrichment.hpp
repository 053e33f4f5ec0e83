#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "enrichkit/bm25.hpp"
#include "enrichkit/corpus.hpp"
#include "enrichkit/gateway.hpp"
#include "enrichkit/rag.hpp"
#include "enrichkit/ranking.hpp"

namespace enrichkit {

struct GenerationRequest {
    Method method = Method::ZS;
    QueryRecord query;
    std::vector<Document> source_docs;
    std::string model_tag;
    double temperature = 0.0;

    /// Throws ArityMismatch unless |source_docs| matches the method.
    static GenerationRequest make(Method method, QueryRecord query, std::vector<Document> source_docs,
                                  std::string model_tag, double temperature = 0.0);
    void validate() const;
};

enum class LengthMode { TruncateAndDiscard, Off };

struct LengthPolicy {
    std::size_t max_words = 100;
    std::size_t min_words = 80;
    LengthMode mode = LengthMode::TruncateAndDiscard;

    static LengthPolicy off() { return LengthPolicy{100, 80, LengthMode::Off}; }
    void validate() const;
};

/// Exact prompt text for the request's method with the query and documents
/// substituted, separated by single spaces.
std::string build_prompt(const GenerationRequest& request);

/// One random relevant doc from each rank group of `group_size` (groups taken in
/// rank order) until `need` docs are found; any shortfall is drawn uniformly from
/// the remaining relevant docs in the qrels. Only the first `depth` ranks count.
std::vector<std::string> select_source_docs_adhoc(const RankedList& ranked, const QueryRecord& query, std::size_t need,
                                                  std::uint64_t seed, std::size_t depth = 1000,
                                                  std::size_t group_size = 10);

struct RagSourceSelection {
    std::vector<std::string> doc_ids;
    bool insufficient = false;
};

/// Scans ranks [first_rank, last_rank] in order for docs containing a gold answer.
RagSourceSelection select_source_docs_rag(const RankedList& ranked, const Corpus& corpus,
                                          const std::vector<std::string>& answers, std::size_t need,
                                          AnswerMatchMode match = AnswerMatchMode::Normalized,
                                          std::size_t first_rank = 6, std::size_t last_rank = 1000);

/// Uniform draw among docs at ranks [first_rank, last_rank] not in `excluded`.
std::string select_random_partner(const RankedList& ranked, const std::set<std::string>& excluded, std::uint64_t seed,
                                  std::size_t first_rank = 1, std::size_t last_rank = 1000);

enum class GenerationStatus { Generated, Discarded, Insufficient, Failed };

std::string_view to_string(GenerationStatus status);

struct GenerationOutcome {
    GenerationStatus status = GenerationStatus::Failed;
    std::optional<Document> document;
    std::string reason;
    int attempts = 0;
};

/// "gen-<method>-<model_tag>-<query_id>"
std::string generated_doc_id(Method method, const std::string& model_tag, const std::string& query_id);

/// Calls the generator, applies the length policy and fills provenance. Backend
/// failures are retried up to `max_attempts` in total, then reported as Failed.
GenerationOutcome generate_document(const GenerationRequest& request, const LengthPolicy& policy,
                                    ModelGateway& gateway, int max_attempts = 3, int max_tokens = 512);

enum class SelectionMode { AdHoc, Rag };

struct EnrichmentConfig {
    Method method = Method::DM;
    std::string model_tag = "mock";
    SelectionMode selection = SelectionMode::AdHoc;
    LengthPolicy policy = LengthPolicy::off();
    std::uint64_t seed = 0;
    std::size_t workers = 4;
    std::size_t candidate_depth = 1000;
    AnswerMatchMode match = AnswerMatchMode::Normalized;
    int max_attempts = 3;
    int max_tokens = 512;
};

struct QueryGenerationStatus {
    std::string query_id;
    GenerationStatus status = GenerationStatus::Failed;
    std::string reason;
    std::vector<std::string> source_doc_ids;
    std::optional<std::string> doc_id;
};

struct EnrichmentResult {
    std::vector<Document> generated;  // query order
    std::vector<QueryGenerationStatus> statuses;

    std::size_t failures() const;
    nlohmann::json manifest(const EnrichmentConfig& config) const;
};

/// Generates at most one document per query. `index` must cover the original
/// corpus; it supplies the BM25 candidate lists for source selection.
EnrichmentResult enrich_corpus(const Corpus& corpus, const QuerySet& queries, const InvertedIndex& index,
                               const EnrichmentConfig& config, ModelGateway& gateway);

}  // namespace enrichkit
