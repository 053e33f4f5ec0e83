#include <doctest.h>

#include "enrichkit/corpus.hpp"
#include "enrichkit/error.hpp"
#include "enrichkit/text.hpp"
#include "helpers.hpp"

using namespace enrichkit;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an enrichkit::Error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("JSONL ingestion counts documents and keeps titles") {
    test::TempDir dir("corpus");
    test::write_file(dir / "c.jsonl",
                     "{\"doc_id\":\"a\",\"text\":\"alpha\"}\n"
                     "{\"doc_id\":\"b\",\"text\":\"beta\",\"title\":\"B\"}\n"
                     "\n"
                     "{\"doc_id\":\"c\",\"text\":\"gamma\"}\n");
    auto r = ingest_corpus(dir / "c.jsonl", CorpusFormat::JSONL);
    CHECK(r.corpus.size() == 3);
    CHECK(r.corpus.at("b").index_text() == "B. beta");
    CHECK(r.corpus.at("a").index_text() == "alpha");
    CHECK(r.warnings.empty());
}

TEST_CASE("ingestion errors") {
    test::TempDir dir("corpus");
    test::write_file(dir / "dup.jsonl", "{\"doc_id\":\"a\",\"text\":\"x\"}\n{\"doc_id\":\"a\",\"text\":\"y\"}\n");
    CHECK(code_of([&] { ingest_corpus(dir / "dup.jsonl", CorpusFormat::JSONL); }) == ErrorCode::DuplicateId);

    test::write_file(dir / "bad.jsonl", "{\"doc_id\":\"a\",\"text\":\"x\"}\n{not json\n");
    try {
        ingest_corpus(dir / "bad.jsonl", CorpusFormat::JSONL);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedRecord);
        CHECK(e.detail().find("line 2") != std::string::npos);
    }
    test::write_file(dir / "empty-text.jsonl", "{\"doc_id\":\"a\",\"text\":\"\"}\n");
    CHECK(code_of([&] { ingest_corpus(dir / "empty-text.jsonl", CorpusFormat::JSONL); }) == ErrorCode::MalformedRecord);

    test::write_file(dir / "empty.jsonl", "");
    auto r = ingest_corpus(dir / "empty.jsonl", CorpusFormat::JSONL);
    CHECK(r.corpus.size() == 0);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("no documents") != std::string::npos);
}

TEST_CASE("TSV ingestion with and without titles") {
    test::TempDir dir("corpus");
    test::write_file(dir / "c.tsv", "a\tplain text\nb\tTitle\tbody text\n");
    auto r = ingest_corpus(dir / "c.tsv", CorpusFormat::TSV);
    CHECK(r.corpus.size() == 2);
    CHECK(!r.corpus.at("a").title);
    CHECK(r.corpus.at("b").index_text() == "Title. body text");
}

TEST_CASE("provenance round-trips and arity is enforced") {
    Corpus c("c");
    c.add(test::doc("a", "x"));
    Document g{"g", "generated", std::nullopt, Provenance::generated(Method::TwoDS, "m", "q1", {"a", "b"})};
    c.add(g);
    CHECK(code_of([&] {
              c.add(Document{"h", "t", std::nullopt, Provenance::generated(Method::ThreeDS, "m", "q1", {"a"})});
          }) == ErrorCode::ArityMismatch);
    CHECK(code_of([&] { c.add(test::doc("a", "again")); }) == ErrorCode::DuplicateId);

    test::TempDir dir("corpus");
    c.save_jsonl(dir / "out.jsonl");
    auto back = ingest_corpus(dir / "out.jsonl", CorpusFormat::JSONL).corpus;
    CHECK(back == c);
    CHECK(back.at("g").provenance.method == Method::TwoDS);
    CHECK(!nlohmann::json(back.at("a")).contains("provenance"));
}

TEST_CASE("method names and arities") {
    for (auto [m, name, arity] : {std::tuple{Method::ZS, "ZS", 0}, {Method::DM, "DM", 1}, {Method::TwoDS, "2DS", 2},
                                  {Method::TwoDSR, "2DSR", 2}, {Method::ThreeDS, "3DS", 3}}) {
        CHECK(method_name(m) == name);
        CHECK(parse_method(name) == m);
        CHECK(method_arity(m) == static_cast<std::size_t>(arity));
    }
    CHECK(!parse_method("4DS"));
}

TEST_CASE("queries, qrels and answers") {
    test::TempDir dir("corpus");
    test::write_file(dir / "q.tsv", "q1\tfirst query\nq2\tsecond query\n");
    test::write_file(dir / "qrels.txt", "q1 0 a 3\nq1 0 b 1\nq2 0 c 2\nq9 0 z 3\n");
    test::write_file(dir / "answers.jsonl", "{\"query_id\":\"q2\",\"text\":\"second query\",\"answers\":[\"x\"]}\n"
                                            "{\"query_id\":\"q3\",\"text\":\"third\",\"answers\":[\"y\",\"z\"]}\n");
    auto qs = QuerySet::load_queries(dir / "q.tsv");
    qs.attach_qrels(dir / "qrels.txt");
    qs.attach_answers(dir / "answers.jsonl");
    CHECK(qs.size() == 3);
    CHECK(qs.at("q1").relevant_ids() == std::vector<std::string>{"a"});
    CHECK(qs.at("q1").grade("b") == 1);
    CHECK(qs.at("q1").grade("zzz") == 0);
    CHECK(qs.at("q3").gold_answers.size() == 2);
    CHECK(code_of([&] { qs.at("nope"); }) == ErrorCode::UnknownQuery);

    test::write_file(dir / "bad-grade.txt", "q1 0 a 7\n");
    CHECK(code_of([&] { qs.attach_qrels(dir / "bad-grade.txt"); }) == ErrorCode::MalformedRecord);

    write_qrels(dir / "copy.txt", qs);
    auto again = QuerySet::load_queries(dir / "q.tsv");
    again.attach_qrels(dir / "copy.txt");
    CHECK(again.at("q1").qrels == qs.at("q1").qrels);
}

TEST_CASE("document store appends and reads back by offset") {
    test::TempDir dir("store");
    {
        auto store = DocumentStore::create(dir.path());
        store.append(test::doc("a", "alpha"));
        store.append(Document{"b", "beta", "T", {}});
        store.commit();
    }
    auto store = DocumentStore::open(dir.path());
    CHECK(store.size() == 2);
    CHECK(store.get("b").title == "T");
    CHECK(store.load_all().size() == 2);
    CHECK(code_of([&] { store.get("zz"); }) == ErrorCode::UnknownDocument);
}

TEST_CASE("chunking is disjoint and covers every word") {
    std::string text;
    for (int i = 0; i < 250; i++) text += "w" + std::to_string(i) + " ";
    auto chunks = chunk_document(text, 100, "doc");
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].doc_id == "doc-0");
    CHECK(chunks[2].doc_id == "doc-2");
    std::size_t words = 0;
    for (const auto& c : chunks) words += split_words(c.text).size();
    CHECK(words == 250);
    CHECK(split_words(chunks[1].text).front() == "w100");
    CHECK(code_of([&] { chunk_document(text, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("views include only the active query's generated docs") {
    Corpus c("c");
    c.add(test::doc("a", "x"));
    c.add(Document{"g1", "t", std::nullopt, Provenance::generated(Method::DM, "m", "q1", {"a"})});
    c.add(Document{"g2", "t", std::nullopt, Provenance::generated(Method::DM, "m", "q2", {"a"})});
    QuerySet qs;
    qs.add({"q1", "x", {}, {}});
    qs.add({"q2", "x", {}, {}});
    CHECK(plain_view(c).documents().size() == 1);
    auto v = enriched_view(c, qs, "q1", Method::DM, "m");
    auto docs = v.documents();
    REQUIRE(docs.size() == 2);
    CHECK(v.included_generated_docs == std::set<std::string>{"g1"});
    CHECK(code_of([&] { enriched_view(c, qs, "q1", Method::ZS, "m"); }) == ErrorCode::UnknownMethodTag);
    CHECK(code_of([&] { enriched_view(c, qs, "q7", Method::DM, "m"); }) == ErrorCode::UnknownQuery);
    CHECK(query_view(c, "q2").included_generated_docs == std::set<std::string>{"g2"});
}
