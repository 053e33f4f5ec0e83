#include "enrichkit/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "enrichkit/error.hpp"
#include "enrichkit/random.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

namespace {

// Five-letter consonant-vowel words that the stemmer leaves untouched, so term
// identity is obvious when reading fixtures.
class WordFactory {
public:
    explicit WordFactory(Rng& rng) : rng_(rng) {}

    std::string next() {
        static constexpr std::string_view kConsonants = "bdfgklmnprtvz";
        static constexpr std::string_view kVowels = "aeiou";
        while (true) {
            std::string w;
            for (int i = 0; i < 5; i++) {
                auto set = (i % 2 == 0) ? kConsonants : kVowels;
                w.push_back(set[uniform_index(rng_, set.size())]);
            }
            if (porter_stem(w) == w && used_.insert(w).second) return w;
        }
    }

private:
    Rng& rng_;
    std::set<std::string> used_;
};

std::string pick(Rng& rng, const std::vector<std::string>& words) {
    return words[uniform_index(rng, words.size())];
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + uniform_index(rng, hi - lo + 1);
}

std::string sentence_text(std::vector<std::string> words) {
    // Break into sentences of 8-12 words so the segmenter has something to do.
    std::string out;
    std::size_t since = 0;
    for (std::size_t i = 0; i < words.size(); i++) {
        std::string w = words[i];
        if (since == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
        out += w;
        since++;
        bool end = since >= 10 || i + 1 == words.size();
        if (end) {
            out += '.';
            since = 0;
        }
        if (i + 1 < words.size()) out += ' ';
    }
    return out;
}

std::string doc_id(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "d%04zu", n);
    return buf;
}

std::string query_id(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "q%02zu", n + 1);
    return buf;
}

}  // namespace

SyntheticFixture make_adhoc_fixture(const AdhocFixtureOptions& options) {
    const std::size_t topical = options.queries * (options.relevant_per_query + options.related_per_query);
    if (topical > options.docs) throw Error(ErrorCode::InvalidArgument, "too few docs for the requested queries");
    Rng rng(options.seed);
    WordFactory words(rng);
    std::vector<std::string> background;
    for (int i = 0; i < 400; i++) background.push_back(words.next());

    SyntheticFixture fx{Corpus("synthetic-adhoc"), {}};
    std::vector<std::array<std::string, 3>> topics;
    for (std::size_t q = 0; q < options.queries; q++) {
        topics.push_back({words.next(), words.next(), words.next()});
        const auto& t = topics.back();
        fx.queries.add(QueryRecord{query_id(q), t[0] + " " + t[1] + " " + t[2], {}, {}});
    }

    // Assign doc numbers randomly so topical docs are spread through the id space.
    std::vector<std::size_t> ids(options.docs);
    for (std::size_t i = 0; i < ids.size(); i++) ids[i] = i;
    for (std::size_t i = ids.size(); i > 1; i--) std::swap(ids[i - 1], ids[uniform_index(rng, i)]);
    std::size_t cursor = 0;

    std::vector<Document> docs;
    auto make_body = [&](std::size_t length, const std::vector<std::string>& inserted) {
        std::vector<std::string> body;
        for (std::size_t i = 0; i < length; i++) body.push_back(pick(rng, background));
        for (const auto& w : inserted) body[uniform_index(rng, body.size())] = w;
        return sentence_text(std::move(body));
    };

    for (std::size_t q = 0; q < options.queries; q++) {
        const auto& t = topics[q];
        auto& record = fx.queries.at(query_id(q));
        for (std::size_t r = 0; r < options.relevant_per_query; r++) {
            std::vector<std::string> inserted;
            // The first topic term is always present; the others vary so relevant docs spread over ranks.
            std::size_t c0 = between(rng, 1, 3), c1 = between(rng, 0, 2), c2 = between(rng, 0, 2);
            for (std::size_t i = 0; i < c0; i++) inserted.push_back(t[0]);
            for (std::size_t i = 0; i < c1; i++) inserted.push_back(t[1]);
            for (std::size_t i = 0; i < c2; i++) inserted.push_back(t[2]);
            auto id = doc_id(ids[cursor++]);
            docs.push_back(Document{id, make_body(between(rng, 60, 110), inserted), std::nullopt, {}});
            record.qrels[id] = (c1 > 0 && c2 > 0) ? 3 : 2;
        }
        for (std::size_t r = 0; r < options.related_per_query; r++) {
            std::vector<std::string> inserted(between(rng, 1, 2), t[uniform_index(rng, 3)]);
            auto id = doc_id(ids[cursor++]);
            docs.push_back(Document{id, make_body(between(rng, 60, 110), inserted), std::nullopt, {}});
            record.qrels[id] = static_cast<int>(uniform_index(rng, 2));
        }
    }
    while (cursor < options.docs) {
        std::vector<std::string> inserted;
        if (uniform_index(rng, 4) == 0) inserted.push_back(topics[uniform_index(rng, topics.size())][uniform_index(rng, 3)]);
        docs.push_back(Document{doc_id(ids[cursor++]), make_body(between(rng, 60, 110), inserted), std::nullopt, {}});
    }
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    for (auto& d : docs) fx.corpus.add(std::move(d));
    return fx;
}

SyntheticFixture make_qa_fixture(const QaFixtureOptions& options) {
    if (options.questions * 16 > options.docs) throw Error(ErrorCode::InvalidArgument, "too few docs for the questions");
    Rng rng(options.seed);
    WordFactory words(rng);
    std::vector<std::string> background;
    for (int i = 0; i < 400; i++) background.push_back(words.next());

    SyntheticFixture fx{Corpus("synthetic-qa"), {}};
    std::vector<Document> docs;
    std::size_t next_doc = 0;
    auto body = [&](std::size_t length) {
        std::vector<std::string> b;
        for (std::size_t i = 0; i < length; i++) b.push_back(pick(rng, background));
        return b;
    };

    for (std::size_t q = 0; q < options.questions; q++) {
        std::string s1 = words.next(), s2 = words.next(), answer = words.next();
        std::string question = "which city hosts the " + s1 + " " + s2;
        fx.queries.add(QueryRecord{query_id(q), question, {}, {answer}});

        // Distractors mention the subject heavily but never the answer. Their number
        // varies so the answer sometimes reaches rank 1 and sometimes does not.
        std::size_t distractors = between(rng, 0, 7);
        std::size_t carriers = between(rng, 5, 8);
        std::vector<std::pair<bool, std::vector<std::string>>> bodies;
        for (std::size_t i = 0; i < distractors; i++) {
            auto b = body(between(rng, 50, 90));
            std::size_t n = between(rng, 3, 5);
            for (std::size_t k = 0; k < n; k++) b[uniform_index(rng, b.size())] = (k % 2 ? s2 : s1);
            bodies.emplace_back(false, std::move(b));
        }
        for (std::size_t i = 0; i < carriers; i++) {
            auto b = body(between(rng, 50, 90));
            std::size_t n = between(rng, 1, 4);
            for (std::size_t k = 0; k < n; k++) b[uniform_index(rng, b.size() / 2) + b.size() / 2] = (k % 2 ? s2 : s1);
            // Answer near the start so truncated generations keep it.
            b[between(rng, 1, 12)] = answer;
            bodies.emplace_back(true, std::move(b));
        }
        for (auto& [carrier, b] : bodies) {
            Document d{doc_id(next_doc++), sentence_text(std::move(b)), std::nullopt, {}};
            if (uniform_index(rng, 3) == 0) d.title = "About " + s1;
            docs.push_back(std::move(d));
        }
    }
    while (next_doc < options.docs) docs.push_back(Document{doc_id(next_doc++), sentence_text(body(between(rng, 50, 90))), std::nullopt, {}});
    for (auto& d : docs) fx.corpus.add(std::move(d));
    return fx;
}

void write_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    fixture.corpus.save_jsonl(dir / "corpus.jsonl");
    std::ofstream queries(dir / "queries.tsv", std::ios::binary);
    bool any_answers = false;
    for (const auto& q : fixture.queries.records()) {
        queries << q.query_id << '\t' << q.text << '\n';
        any_answers = any_answers || !q.gold_answers.empty();
    }
    bool any_qrels = false;
    for (const auto& q : fixture.queries.records()) any_qrels = any_qrels || !q.qrels.empty();
    if (any_qrels) write_qrels(dir / "qrels.txt", fixture.queries);
    if (any_answers) {
        std::ofstream answers(dir / "answers.jsonl", std::ios::binary);
        for (const auto& q : fixture.queries.records())
            answers << json{{"query_id", q.query_id}, {"text", q.text}, {"answers", q.gold_answers}}.dump() << '\n';
    }
}

SyntheticFixture load_fixture(const std::filesystem::path& dir) {
    SyntheticFixture fx{ingest_corpus(dir / "corpus.jsonl", CorpusFormat::JSONL).corpus, QuerySet::load_queries(dir / "queries.tsv")};
    if (std::filesystem::exists(dir / "qrels.txt")) fx.queries.attach_qrels(dir / "qrels.txt");
    if (std::filesystem::exists(dir / "answers.jsonl")) fx.queries.attach_answers(dir / "answers.jsonl");
    return fx;
}

}  // namespace enrichkit
