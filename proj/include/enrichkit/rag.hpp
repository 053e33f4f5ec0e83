#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "enrichkit/bm25.hpp"
#include "enrichkit/corpus.hpp"
#include "enrichkit/gateway.hpp"
#include "enrichkit/ranking.hpp"

namespace enrichkit {

enum class AnswerMatchMode {
    Normalized,    // lowercase + whitespace collapse, substring
    Raw,           // literal substring
    WordBoundary,  // normalized, and the match may not touch letters/digits on either side
};

std::optional<AnswerMatchMode> parse_answer_match(std::string_view name);

/// True iff any gold answer occurs in the response under the chosen rule.
bool answer_is_correct(std::string_view answer_text, const std::vector<std::string>& gold_answers,
                       AnswerMatchMode mode = AnswerMatchMode::Normalized);

inline constexpr std::size_t kMaxPassages = 5;

/// No passages: the plain question prompt. Otherwise the passage prompt with
/// passages numbered in retrieval order. More than five passages is an error.
std::string build_qa_prompt(std::string_view question, const std::vector<std::string>& passages);

struct RagRun {
    std::string query_id;
    RankedList retrieved;
    std::string prompt;
    std::string answer_text;
    bool correct = false;
    bool answer_in_top5 = false;
    bool generated_in_top5 = false;
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const RagRun& run);

/// Percentages over queries.
struct RagAggregate {
    double acc = 0.0;
    std::optional<double> ans5;  // absent without retrieval
    std::optional<double> gen5;
    std::size_t queries = 0;
    std::size_t failures = 0;
};

struct RagOptions {
    bool with_retrieval = true;
    std::size_t top_k = kMaxPassages;
    AnswerMatchMode match = AnswerMatchMode::Normalized;
    std::size_t workers = 4;
    double temperature = 0.0;
    int max_tokens = 64;
};

struct RagResult {
    std::vector<RagRun> runs;  // in query order
    RagAggregate aggregate;
};

/// Index to retrieve from for one query, so callers can plug the plain corpus or
/// a per-query enriched view. Called sequentially, before any answering starts.
using IndexProvider = std::function<std::shared_ptr<const InvertedIndex>(const QueryRecord&)>;

/// Answers every query (which must carry gold answers) with or without retrieved
/// context. Backend failures mark the query incorrect and are counted.
RagResult run_rag(const std::vector<QueryRecord>& queries, const IndexProvider& index_for, ModelGateway& gateway,
                  const RagOptions& options);

RagAggregate aggregate_rag(const std::vector<RagRun>& runs, bool with_retrieval);

}  // namespace enrichkit
