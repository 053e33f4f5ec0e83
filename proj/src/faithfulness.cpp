#include "enrichkit/faithfulness.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

#include "enrichkit/enrichment.hpp"
#include "enrichkit/error.hpp"
#include "enrichkit/parallel.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

std::set<std::string, std::less<>> SegmenterOptions::default_abbreviations() {
    return {"mr",  "mrs",  "ms",   "dr",  "prof", "sr",  "jr",  "st",   "vs",  "e.g", "i.e", "inc", "ltd",
            "co",  "corp", "no",   "fig", "figs", "approx", "dept", "est", "u.s", "u.k", "jan", "feb", "mar",
            "apr", "jun",  "jul",  "aug", "sep",  "sept", "oct", "nov", "dec", "gen", "gov", "sen", "rep",
            "mt",  "ft",   "vol",  "al",  "cf",   "ca"};
}

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_closer(char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

bool is_terminator(char c) {
    return c == '.' || c == '!' || c == '?';
}

// True when the '.' at `dot` closes an abbreviation or initial.
bool abbreviation_before(std::string_view text, std::size_t dot, const SegmenterOptions& options) {
    std::size_t start = dot;
    while (start > 0 && !is_space(text[start - 1])) start--;
    std::string token = to_lower_ascii(text.substr(start, dot - start));
    while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\''))
        token.erase(token.begin());
    if (token.empty()) return false;
    if (token.size() == 1 && std::isalpha(static_cast<unsigned char>(token[0]))) return true;
    return options.abbreviations.contains(token);
}

void push_span(std::vector<SentenceSpan>& out, std::string_view text, std::size_t start, std::size_t end) {
    while (start < end && is_space(text[start])) start++;
    while (end > start && is_space(text[end - 1])) end--;
    if (end > start) out.push_back(SentenceSpan{std::string(text.substr(start, end - start)), start, end});
}

}  // namespace

std::vector<SentenceSpan> segment_sentences(std::string_view text, const SegmenterOptions& options) {
    std::vector<SentenceSpan> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            i++;
            continue;
        }
        std::size_t last_terminator = i;
        std::size_t end = i + 1;
        while (end < text.size() && is_terminator(text[end])) last_terminator = end++;
        while (end < text.size() && is_closer(text[end])) end++;
        if (end < text.size() && !is_space(text[end])) {
            i = end;
            continue;
        }
        bool boundary = true;
        if (text[last_terminator] == '.' && last_terminator == i && abbreviation_before(text, i, options))
            boundary = false;
        if (boundary && end < text.size()) {
            std::size_t next = end;
            while (next < text.size() && is_space(text[next])) next++;
            if (next < text.size() && std::islower(static_cast<unsigned char>(text[next]))) boundary = false;
        }
        if (boundary) {
            push_span(out, text, start, end);
            start = end;
        }
        i = end;
    }
    push_span(out, text, start, text.size());
    return out;
}

NliFunction gateway_nli(ModelGateway& gateway) {
    return [&gateway](const std::string& premise, const std::string& hypothesis) {
        return gateway.nli_score(premise, hypothesis);
    };
}

double NliCache::score(const std::string& premise, const std::string& hypothesis) {
    std::pair<std::string, std::string> key{sha256_hex(premise), sha256_hex(hypothesis)};
    {
        std::shared_lock lock(mutex_);
        if (auto it = scores_.find(key); it != scores_.end()) {
            hits_++;
            return it->second;
        }
    }
    misses_++;
    double value = inner_(premise, hypothesis);
    std::unique_lock lock(mutex_);
    scores_.insert_or_assign(std::move(key), value);
    return value;
}

NliFunction NliCache::as_function() {
    return [this](const std::string& premise, const std::string& hypothesis) { return score(premise, hypothesis); };
}

std::string kb_premise(const std::vector<const Document*>& docs) {
    std::string premise;
    for (std::size_t i = 0; i < docs.size(); i++) {
        if (i > 0) premise.push_back('\n');
        premise += docs[i]->index_text();
    }
    return premise;
}

namespace {

double call_nli(const NliFunction& nli, const std::string& premise, const std::string& hypothesis) {
    try {
        return nli(premise, hypothesis);
    } catch (const Error& e) {
        if (e.is_backend()) throw Error(ErrorCode::NliBackendError, e.what());
        throw;
    }
}

}  // namespace

KnowledgeBase build_kb(const SentenceSpan& sentence, std::size_t k, const std::vector<const Document*>& sample,
                       const NliFunction& nli, std::size_t workers) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (sample.empty()) throw Error(ErrorCode::InvalidArgument, "empty sample");

    std::vector<const Document*> remaining = sample;
    std::sort(remaining.begin(), remaining.end(),
              [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });

    KnowledgeBase kb;
    kb.sentence = sentence;
    std::vector<const Document*> current;
    std::vector<double> scores;
    for (std::size_t step = 1; step <= k && !remaining.empty(); step++) {
        scores.assign(remaining.size(), 0.0);
        parallel_for(remaining.size(), workers, [&](std::size_t c) {
            auto premise_docs = current;
            premise_docs.push_back(remaining[c]);
            scores[c] = call_nli(nli, kb_premise(premise_docs), sentence.text);
        });
        // remaining is sorted by doc_id, so the first maximum is the tie-break winner.
        std::size_t best = 0;
        for (std::size_t c = 1; c < remaining.size(); c++)
            if (scores[c] > scores[best]) best = c;

        current.push_back(remaining[best]);
        kb.explored.push_back(remaining[best]->doc_id);
        kb.steps = step;
        kb.best_score = std::max(kb.best_score, scores[best]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
        if (scores[best] >= kEntailmentThreshold) {
            kb.docs = kb.explored;
            kb.final_score = scores[best];
            kb.entailed = true;
            return kb;
        }
    }
    return kb;
}

std::string_view to_string(SampleTag tag) {
    return tag == SampleTag::Rel ? "Rel" : "Corpus";
}

void to_json(json& j, const FaithfulnessReport& report) {
    json sentences = json::array();
    for (const auto& kb : report.per_sentence)
        sentences.push_back(json{{"sentence", kb.sentence.text},
                                 {"start", kb.sentence.start_offset},
                                 {"end", kb.sentence.end_offset},
                                 {"kb", kb.docs},
                                 {"explored", kb.explored},
                                 {"final_score", kb.final_score},
                                 {"best_score", kb.best_score},
                                 {"entailed", kb.entailed}});
    j = json{{"doc_id", report.doc_id},
             {"k", report.k},
             {"sample", to_string(report.sample_tag)},
             {"score", report.score},
             {"sentences", std::move(sentences)}};
}

FaithfulnessReport faithfulness_score(const Document& doc, std::size_t k, const std::vector<const Document*>& sample,
                                      const NliFunction& nli, SampleTag tag, std::size_t workers,
                                      const SegmenterOptions& segmenter) {
    auto sentences = segment_sentences(doc.text, segmenter);
    if (sentences.empty()) throw Error(ErrorCode::InvalidArgument, doc.doc_id + " has no sentences");
    FaithfulnessReport report;
    report.doc_id = doc.doc_id;
    report.k = k;
    report.sample_tag = tag;
    std::size_t entailed = 0;
    for (const auto& s : sentences) {
        report.per_sentence.push_back(build_kb(s, k, sample, nli, workers));
        entailed += report.per_sentence.back().entailed ? 1 : 0;
    }
    report.score = 100.0 * static_cast<double>(entailed) / static_cast<double>(sentences.size());
    return report;
}

FaithfulnessSamples build_samples(const QueryRecord& query, const RankedList& ranked,
                                  const std::set<std::string>& excluded, std::size_t depth) {
    FaithfulnessSamples samples;
    for (auto& id : query.relevant_ids())
        if (!excluded.contains(id)) samples.rel.push_back(std::move(id));
    if (samples.rel.empty()) throw Error(ErrorCode::NoRelevantDocs, query.query_id);
    samples.corpus = samples.rel;
    std::set<std::string> seen(samples.rel.begin(), samples.rel.end());
    for (std::size_t i = 0; i < std::min(depth, ranked.size()); i++) {
        const auto& id = ranked.entries[i].doc_id;
        if (excluded.contains(id) || !seen.insert(id).second) continue;
        samples.corpus.push_back(id);
    }
    return samples;
}

RdBaseline rd_baseline(const Corpus& corpus, const QueryRecord& query, const RankedList& ranked,
                       const std::vector<std::string>& sample_ids, std::uint64_t seed, std::size_t k,
                       const NliFunction& nli, std::size_t workers, std::size_t count) {
    // Judged docs missing from the corpus cannot be scored, so they are not candidates.
    QueryRecord known = query;
    std::erase_if(known.qrels, [&](const auto& kv) { return corpus.find(kv.first) == nullptr; });
    auto relevant = known.relevant_ids();
    if (relevant.empty()) throw Error(ErrorCode::NoRelevantDocs, query.query_id);
    RdBaseline out;
    std::size_t want = std::min(count, relevant.size());
    out.selected = select_source_docs_adhoc(ranked, known, want, seed);
    out.shortfall = count - out.selected.size();

    std::set<std::string> selected(out.selected.begin(), out.selected.end());
    std::vector<const Document*> sample;
    for (const auto& id : sample_ids)
        if (!selected.contains(id))
            if (const Document* d = corpus.find(id)) sample.push_back(d);
    if (sample.empty()) throw Error(ErrorCode::NoRelevantDocs, query.query_id + ": nothing left to entail against");

    double sum = 0.0;
    for (const auto& id : out.selected) {
        auto report = faithfulness_score(corpus.at(id), k, sample, nli, SampleTag::Rel, workers);
        out.per_doc.push_back(report.score);
        sum += report.score;
    }
    out.score = out.selected.empty() ? 0.0 : sum / static_cast<double>(out.selected.size());
    return out;
}

}  // namespace enrichkit
