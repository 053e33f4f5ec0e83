#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "enrichkit/corpus.hpp"
#include "enrichkit/gateway.hpp"
#include "enrichkit/ranking.hpp"

namespace enrichkit {

struct SentenceSpan {
    std::string text;
    std::size_t start_offset = 0;  // byte offsets into the source, [start, end)
    std::size_t end_offset = 0;

    bool operator==(const SentenceSpan&) const = default;
};

struct SegmenterOptions {
    /// Lowercase abbreviations without their final period ("dr", "e.g").
    std::set<std::string, std::less<>> abbreviations = default_abbreviations();

    static std::set<std::string, std::less<>> default_abbreviations();
};

/// Rule-based sentence splitter. A sentence ends at '.', '!' or '?' (plus any
/// closing quotes/brackets) followed by whitespace and a token that does not start
/// with a lowercase letter. A period never ends a sentence after a listed
/// abbreviation or a single-letter initial; periods inside tokens ("3.5") never do.
std::vector<SentenceSpan> segment_sentences(std::string_view text, const SegmenterOptions& options = {});

using NliFunction = std::function<double(const std::string& premise, const std::string& hypothesis)>;

NliFunction gateway_nli(ModelGateway& gateway);

/// Memoises an NLI scorer on (sha256(premise), sha256(hypothesis)). Concurrent
/// writers of the same key store the same value.
class NliCache {
public:
    explicit NliCache(NliFunction inner) : inner_(std::move(inner)) {}

    double score(const std::string& premise, const std::string& hypothesis);
    NliFunction as_function();

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }

private:
    NliFunction inner_;
    std::shared_mutex mutex_;
    std::map<std::pair<std::string, std::string>, double> scores_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

inline constexpr double kEntailmentThreshold = 0.5;

struct KnowledgeBase {
    SentenceSpan sentence;
    /// Docs in order of greedy addition when entailed; empty otherwise.
    std::vector<std::string> docs;
    /// Every doc the greedy search added, entailed or not.
    std::vector<std::string> explored;
    /// Score of the returned set; 0 when nothing entails the sentence.
    double final_score = 0.0;
    /// Highest score seen at any step.
    double best_score = 0.0;
    bool entailed = false;
    std::size_t steps = 0;
};

/// Premise handed to the NLI model for a set of docs: their texts in order,
/// separated by single newlines.
std::string kb_premise(const std::vector<const Document*>& docs);

/// Greedy knowledge-base construction: at each of up to k steps add the sample doc
/// that maximises NLI(premise of KB + doc, sentence) (ties to the smaller doc_id)
/// and stop as soon as the score reaches 0.5. Failing after k steps (or running out
/// of docs) yields an empty, non-entailed KB. Candidate scoring uses `workers`
/// threads. Backend failures surface as NliBackendError.
KnowledgeBase build_kb(const SentenceSpan& sentence, std::size_t k, const std::vector<const Document*>& sample,
                       const NliFunction& nli, std::size_t workers = 1);

enum class SampleTag { Rel, Corpus };

std::string_view to_string(SampleTag tag);

struct FaithfulnessReport {
    std::string doc_id;
    std::size_t k = 1;
    SampleTag sample_tag = SampleTag::Rel;
    std::vector<KnowledgeBase> per_sentence;
    double score = 0.0;  // percentage of entailed sentences
};

void to_json(nlohmann::json& j, const FaithfulnessReport& report);

/// Percentage of the document's sentences with a non-empty knowledge base.
/// Throws InvalidArgument when the document has no sentences.
FaithfulnessReport faithfulness_score(const Document& doc, std::size_t k, const std::vector<const Document*>& sample,
                                      const NliFunction& nli, SampleTag tag = SampleTag::Rel, std::size_t workers = 1,
                                      const SegmenterOptions& segmenter = {});

struct FaithfulnessSamples {
    std::vector<std::string> rel;     // ascending doc_id
    std::vector<std::string> corpus;  // rel, then the retrieved docs in rank order
};

/// Rel = relevant docs; Corpus = Rel plus the top `depth` retrieved docs. Docs in
/// `excluded` (e.g. the document being evaluated) are left out of both.
FaithfulnessSamples build_samples(const QueryRecord& query, const RankedList& ranked,
                                  const std::set<std::string>& excluded, std::size_t depth = 1000);

struct RdBaseline {
    double score = 0.0;
    std::vector<std::string> selected;
    std::vector<double> per_doc;
    std::size_t shortfall = 0;  // 5 - selected.size()
};

/// Average faithfulness of up to five relevant docs picked with the rank-group
/// procedure used for source selection, scored against `sample_ids` minus the
/// selected docs.
RdBaseline rd_baseline(const Corpus& corpus, const QueryRecord& query, const RankedList& ranked,
                       const std::vector<std::string>& sample_ids, std::uint64_t seed, std::size_t k,
                       const NliFunction& nli, std::size_t workers = 1, std::size_t count = 5);

}  // namespace enrichkit
