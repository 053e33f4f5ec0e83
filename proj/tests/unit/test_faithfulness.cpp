#include <doctest.h>

#include <fstream>

#include "enrichkit/error.hpp"
#include "enrichkit/faithfulness.hpp"
#include "enrichkit/text.hpp"
#include "helpers.hpp"

using namespace enrichkit;

namespace {

std::vector<const Document*> ptrs(const std::vector<Document>& docs) {
    std::vector<const Document*> out;
    for (const auto& d : docs) out.push_back(&d);
    return out;
}

// 1 when the premise contains the hypothesis (case-insensitive, final period dropped).
double contains_nli(const std::string& premise, const std::string& hypothesis) {
    std::string h = to_lower_ascii(hypothesis);
    if (!h.empty() && h.back() == '.') h.pop_back();
    return to_lower_ascii(premise).find(h) != std::string::npos ? 1.0 : 0.0;
}

}  // namespace

TEST_CASE("segmentation matches the hand-segmented set") {
    std::ifstream in(test::data("segmentation.json"));
    auto cases = nlohmann::json::parse(in);
    std::size_t total = 0;
    for (const auto& c : cases) {
        std::string text = c["text"];
        auto spans = segment_sentences(text);
        std::vector<std::string> got;
        for (const auto& s : spans) {
            got.push_back(s.text);
            // Offsets point back into the source.
            CHECK(text.substr(s.start_offset, s.end_offset - s.start_offset) == s.text);
        }
        CHECK_MESSAGE(got == c["sentences"].get<std::vector<std::string>>(), text);
        total += got.size();
    }
    CHECK(total == 30);
}

TEST_CASE("segmentation of empty and whitespace-only text") {
    CHECK(segment_sentences("").empty());
    CHECK(segment_sentences(" \n\t ").empty());
}

TEST_CASE("kb premise joins documents with newlines") {
    std::vector<Document> docs{test::doc("a", "first"), Document{"b", "second", "T", {}}};
    CHECK(kb_premise(ptrs(docs)) == "first\nT. second");
}

TEST_CASE("greedy knowledge base construction") {
    std::vector<Document> docs{test::doc("a", "A"), test::doc("b", "B"), test::doc("c", "C")};
    SentenceSpan s{"claim", 0, 5};

    SUBCASE("single document entails") {
        auto nli = [](const std::string& p, const std::string&) { return p == "B" ? 0.9 : 0.1; };
        auto kb = build_kb(s, 1, ptrs(docs), nli);
        CHECK(kb.entailed);
        CHECK(kb.docs == std::vector<std::string>{"b"});
        CHECK(kb.final_score == 0.9);
        CHECK(kb.steps == 1);
    }
    SUBCASE("two documents needed together") {
        auto nli = [](const std::string& p, const std::string&) {
            if (p == "C\nA") return 0.7;
            if (p == "C") return 0.4;
            return 0.2;
        };
        CHECK(!build_kb(s, 1, ptrs(docs), nli).entailed);
        auto kb = build_kb(s, 2, ptrs(docs), nli);
        CHECK(kb.entailed);
        CHECK(kb.docs == std::vector<std::string>{"c", "a"});
    }
    SUBCASE("threshold is inclusive") {
        auto nli = [](const std::string&, const std::string&) { return 0.5; };
        auto kb = build_kb(s, 1, ptrs(docs), nli);
        CHECK(kb.entailed);
        CHECK(kb.docs == std::vector<std::string>{"a"});  // all tie, smallest id
    }
    SUBCASE("failure returns an empty set with score zero") {
        auto nli = [](const std::string&, const std::string&) { return 0.3; };
        auto kb = build_kb(s, 5, ptrs(docs), nli);
        CHECK(!kb.entailed);
        CHECK(kb.docs.empty());
        CHECK(kb.final_score == 0.0);
        CHECK(kb.explored.size() == 3);  // ran out of docs before k
        CHECK(kb.best_score == 0.3);
    }
    SUBCASE("parallel scoring gives the same result") {
        auto nli = [](const std::string& p, const std::string&) { return p.size() * 0.1; };
        auto one = build_kb(s, 3, ptrs(docs), nli, 1);
        auto many = build_kb(s, 3, ptrs(docs), nli, 4);
        CHECK(one.docs == many.docs);
        CHECK(one.explored == many.explored);
    }
    SUBCASE("backend errors surface as NliBackendError") {
        auto nli = [](const std::string&, const std::string&) -> double { throw Error(ErrorCode::Timeout, "t"); };
        try {
            build_kb(s, 1, ptrs(docs), nli);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NliBackendError);
        }
    }
}

TEST_CASE("faithfulness score is the percentage of entailed sentences") {
    std::vector<Document> sample{test::doc("s1", "cats purr"), test::doc("s2", "dogs bark")};
    Document gen = test::doc("g", "Cats purr. Dogs bark. Fish fly.");
    auto report = faithfulness_score(gen, 1, ptrs(sample), contains_nli);
    REQUIRE(report.per_sentence.size() == 3);
    CHECK(report.score == doctest::Approx(200.0 / 3.0));
    CHECK(report.per_sentence[2].docs.empty());
    CHECK(nlohmann::json(report)["sentences"].size() == 3);
}

TEST_CASE("nli cache memoises") {
    int calls = 0;
    NliCache cache([&](const std::string&, const std::string&) {
        calls++;
        return 0.4;
    });
    auto f = cache.as_function();
    f("p", "h");
    f("p", "h");
    f("p", "h2");
    CHECK(calls == 2);
    CHECK(cache.hits() == 1);
}

TEST_CASE("samples and the relevant-document baseline") {
    Corpus c("c");
    for (int i = 0; i < 12; i++) c.add(test::doc("d" + std::to_string(i), "Topic words here. More topic words."));
    QueryRecord q{"q", "topic", {{"d0", 2}, {"d1", 2}, {"d2", 3}, {"d11", 2}, {"d5", 1}}, {}};
    RankedList ranked{"q", {}};
    for (int i = 0; i < 12; i++) ranked.entries.push_back({"d" + std::to_string(i), 20.0 - i});
    auto samples = build_samples(q, ranked, {"d1"}, 4);
    CHECK(samples.rel == std::vector<std::string>{"d0", "d11", "d2"});
    CHECK(samples.corpus == std::vector<std::string>{"d0", "d11", "d2", "d3"});
    CHECK_THROWS_AS(build_samples(QueryRecord{"q", "t", {}, {}}, ranked, {}), Error);

    auto all = build_samples(q, ranked, {}, 12);
    auto rd = rd_baseline(c, q, ranked, all.corpus, 1, 1, contains_nli);
    CHECK(rd.selected.size() == 4);
    CHECK(rd.shortfall == 1);
    CHECK(rd.score == 100.0);  // identical texts entail each other
}
