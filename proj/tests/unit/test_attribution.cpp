#include <doctest.h>

#include "enrichkit/attribution.hpp"
#include "enrichkit/error.hpp"
#include "helpers.hpp"

using namespace enrichkit;

namespace {

Document generated(std::string id, std::string text, std::vector<std::string> sources) {
    Document d = test::doc(std::move(id), std::move(text));
    d.provenance = Provenance::generated(Method::ThreeDS, "m", "q1", std::move(sources));
    return d;
}

double contains_answer_nli(const std::string& premise, const std::string& hypothesis) {
    auto answer = hypothesis.substr(hypothesis.rfind(' ') + 1);
    return premise.find(answer) != std::string::npos ? 0.9 : 0.1;
}

}  // namespace

TEST_CASE("attribution threshold is strict") {
    CHECK(!is_attributed(0.5));
    CHECK(is_attributed(0.5000001));
    CHECK(attribution_hypothesis("who wrote it", "homer") == "who wrote it homer");
}

TEST_CASE("candidate selection") {
    Corpus c("c");
    c.add(test::doc("a", "iliad poem troy"));
    c.add(test::doc("b", "iliad iliad homer"));
    c.add(test::doc("c", "unrelated"));
    auto index = InvertedIndex::build(plain_view(c));
    CHECK(select_candidate_bm25(index, "iliad") == "b");
    CHECK(select_candidate_bm25_nli(index, "iliad", "troy", contains_answer_nli) == "a");
    // All tie: smaller doc_id.
    CHECK(select_candidate_bm25_nli(index, "iliad", "nothing", contains_answer_nli) == "a");
    CHECK_THROWS_AS(select_candidate_bm25(index, "zebra"), Error);
    CHECK(parse_ranker("bm25+nli") == AttributionRanker::Bm25Nli);
}

TEST_CASE("acc_nogen scores sources, never the generated text") {
    Corpus c("c");
    c.add(test::doc("s1", "homer wrote"));
    c.add(test::doc("s2", "a poem"));
    c.add(test::doc("s3", "epic"));
    Document g = generated("g", "homer homer", {"s1", "s2", "s3"});
    CHECK(acc_nogen(g, c, "who", "homer", contains_answer_nli, true));

    Document mutated = g;
    mutated.text = "completely different words";
    CHECK(acc_nogen(mutated, c, "who", "homer", contains_answer_nli, false));

    Document unsupported = generated("g2", "virgil", {"s2", "s3", "s1"});
    CHECK(!acc_nogen(unsupported, c, "who", "virgil", contains_answer_nli, true));

    // Originals fall back to the plain flag.
    CHECK(acc_nogen(c.at("s2"), c, "who", "homer", contains_answer_nli, true));
    CHECK(!acc_nogen(c.at("s1"), c, "who", "homer", contains_answer_nli, false));

    Document orphan = generated("g3", "x", {"s1", "s2", "missing"});
    CHECK_THROWS_AS(acc_nogen(orphan, c, "who", "homer", contains_answer_nli, true), Error);
}

TEST_CASE("aggregates") {
    std::vector<AttributionCase> cases(4);
    cases[0].entailed = true;
    cases[0].candidate_contains_answer = true;
    cases[1].entailed = true;
    auto agg = entailment_accuracy(cases);
    CHECK(agg.acc == 50.0);
    CHECK(agg.ca == 25.0);
    CHECK(!agg.acc_nogen);
    for (auto& c : cases) c.acc_nogen = false;
    cases[3].acc_nogen = true;
    CHECK(entailment_accuracy(cases).acc_nogen == 25.0);
    CHECK(entailment_accuracy({}).cases == 0);
}

TEST_CASE("attribution matrix over plain and enriched views") {
    Corpus plain("c");
    plain.add(test::doc("a", "iliad author homer"));
    plain.add(test::doc("b", "iliad troy war"));
    plain.add(test::doc("c", "greek epic"));
    Corpus enriched = plain;
    enriched.add(generated("g", "iliad iliad iliad author homer", {"a", "b", "c"}));
    auto pi = std::make_shared<const InvertedIndex>(InvertedIndex::build(plain_view(plain)));
    std::vector<const Document*> all;
    for (const auto& d : enriched.docs()) all.push_back(&d);
    auto ei = std::make_shared<const InvertedIndex>(InvertedIndex::build(all));

    MockConfig mc;
    mc.generate.mode = MockMode::Echo;
    mc.generate.echo_slot = "passage1";
    ModelGateway gw(std::make_shared<MockBackend>(mc), {});
    std::vector<QueryRecord> qs{{"q1", "iliad", {}, {"homer"}}};
    auto res = run_attribution_matrix(qs, [&](const QueryRecord&) { return pi; },
                                      [&](const QueryRecord&) { return ei; }, enriched, gw, contains_answer_nli, {});
    REQUIRE(res.cases.size() == 4);
    using S = AttributionSetting;
    // CA depends only on the attribution view.
    CHECK(res.aggregates[S::RagPlain_AttrPlain].ca == res.aggregates[S::RagEnriched_AttrPlain].ca);
    CHECK(res.aggregates[S::RagPlain_AttrEnriched].ca == res.aggregates[S::RagEnriched_AttrEnriched].ca);
    CHECK(!res.aggregates[S::RagPlain_AttrPlain].acc_nogen);
    CHECK(res.aggregates[S::RagEnriched_AttrEnriched].acc_nogen);
    CHECK(res.cases[3].candidate == "g");
    CHECK(res.cases[3].candidate_generated);
}
