#include "enrichkit/rag.hpp"

#include <cctype>

#include "enrichkit/error.hpp"
#include "enrichkit/parallel.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

std::optional<AnswerMatchMode> parse_answer_match(std::string_view name) {
    if (name == "normalized") return AnswerMatchMode::Normalized;
    if (name == "raw") return AnswerMatchMode::Raw;
    if (name == "word") return AnswerMatchMode::WordBoundary;
    return std::nullopt;
}

namespace {

bool alnum_at(const std::string& s, std::size_t i) {
    return std::isalnum(static_cast<unsigned char>(s[i])) != 0;
}

bool bounded_find(const std::string& hay, const std::string& needle) {
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        bool left_ok = pos == 0 || !alnum_at(hay, pos - 1) || !alnum_at(needle, 0);
        std::size_t end = pos + needle.size();
        bool right_ok = end >= hay.size() || !alnum_at(hay, end) || !alnum_at(needle, needle.size() - 1);
        if (left_ok && right_ok) return true;
    }
    return false;
}

}  // namespace

bool answer_is_correct(std::string_view answer_text, const std::vector<std::string>& gold_answers,
                       AnswerMatchMode mode) {
    if (mode == AnswerMatchMode::Raw) {
        for (const auto& g : gold_answers)
            if (!g.empty() && answer_text.find(g) != std::string_view::npos) return true;
        return false;
    }
    std::string hay = to_lower_ascii(normalize_whitespace(answer_text));
    for (const auto& g : gold_answers) {
        std::string needle = to_lower_ascii(normalize_whitespace(g));
        if (needle.empty()) continue;
        if (mode == AnswerMatchMode::Normalized ? hay.find(needle) != std::string::npos : bounded_find(hay, needle))
            return true;
    }
    return false;
}

std::string build_qa_prompt(std::string_view question, const std::vector<std::string>& passages) {
    if (passages.size() > kMaxPassages)
        throw Error(ErrorCode::TooManyPassages, std::to_string(passages.size()) + " passages, at most 5 allowed");
    std::string prompt;
    if (passages.empty()) {
        prompt = "Instructions: Answer the question. Keep the answer concise. Question: ";
    } else {
        prompt = "Instructions: Answer the question based on the given passages below. Keep the answer concise. Passages:";
        for (std::size_t i = 0; i < passages.size(); i++)
            prompt += " Passage " + std::to_string(i + 1) + ": " + passages[i];
        prompt += " Question: ";
    }
    prompt += question;
    return prompt;
}

void to_json(json& j, const RagRun& run) {
    json retrieved = json::array();
    for (const auto& e : run.retrieved.entries) retrieved.push_back(json{{"doc_id", e.doc_id}, {"score", e.score}});
    j = json{{"query_id", run.query_id},
             {"retrieved", std::move(retrieved)},
             {"prompt", run.prompt},
             {"response", run.answer_text},
             {"correct", run.correct},
             {"answer_in_top5", run.answer_in_top5},
             {"generated_in_top5", run.generated_in_top5}};
    if (run.error) j["error"] = *run.error;
}

RagAggregate aggregate_rag(const std::vector<RagRun>& runs, bool with_retrieval) {
    RagAggregate agg;
    agg.queries = runs.size();
    if (runs.empty()) return agg;
    std::size_t correct = 0, ans = 0, gen = 0;
    for (const auto& r : runs) {
        correct += r.correct ? 1 : 0;
        ans += r.answer_in_top5 ? 1 : 0;
        gen += r.generated_in_top5 ? 1 : 0;
        agg.failures += r.error ? 1 : 0;
    }
    double n = static_cast<double>(runs.size());
    agg.acc = 100.0 * static_cast<double>(correct) / n;
    if (with_retrieval) {
        agg.ans5 = 100.0 * static_cast<double>(ans) / n;
        agg.gen5 = 100.0 * static_cast<double>(gen) / n;
    }
    return agg;
}

RagResult run_rag(const std::vector<QueryRecord>& queries, const IndexProvider& index_for, ModelGateway& gateway,
                  const RagOptions& options) {
    if (options.top_k > kMaxPassages) throw Error(ErrorCode::TooManyPassages, "top_k > 5");
    RagResult result;
    result.runs.resize(queries.size());

    std::vector<std::shared_ptr<const InvertedIndex>> indexes(queries.size());
    if (options.with_retrieval)
        for (std::size_t i = 0; i < queries.size(); i++) indexes[i] = index_for(queries[i]);

    parallel_for(queries.size(), options.workers, [&](std::size_t i) {
        const QueryRecord& q = queries[i];
        RagRun& run = result.runs[i];
        run.query_id = q.query_id;
        std::vector<std::string> passages;
        if (options.with_retrieval) {
            const InvertedIndex& index = *indexes[i];
            try {
                run.retrieved = index.search(q.text, options.top_k, q.query_id);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyQueryAfterStemming) throw;
                run.retrieved = RankedList{q.query_id, {}};
            }
            for (const auto& e : run.retrieved.entries) {
                const Document* doc = index.find(e.doc_id);
                passages.push_back(doc->index_text());
                if (answer_is_correct(passages.back(), q.gold_answers, options.match)) run.answer_in_top5 = true;
                if (doc->is_generated() && doc->provenance.query_id == q.query_id) run.generated_in_top5 = true;
            }
        }
        run.prompt = build_qa_prompt(q.text, passages);
        try {
            run.answer_text = gateway.generate(run.prompt, options.temperature, options.max_tokens);
            run.correct = answer_is_correct(run.answer_text, q.gold_answers, options.match);
        } catch (const Error& e) {
            if (!e.is_backend()) throw;
            run.error = e.what();
            run.correct = false;
        }
    });
    result.aggregate = aggregate_rag(result.runs, options.with_retrieval);
    return result;
}

}  // namespace enrichkit
