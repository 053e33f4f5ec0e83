#pragma once

#include <cstdint>
#include <filesystem>

#include "enrichkit/corpus.hpp"

namespace enrichkit {

/// Deterministic toy collections for offline tests and demos.
struct SyntheticFixture {
    Corpus corpus;
    QuerySet queries;
};

struct AdhocFixtureOptions {
    std::size_t docs = 500;
    std::size_t queries = 20;
    std::size_t relevant_per_query = 8;
    std::size_t related_per_query = 6;
    std::uint64_t seed = 7;
};

/// Ad hoc collection: each query names three topic terms; relevant docs use them
/// with varying frequency, related docs use one of them, the rest is background.
SyntheticFixture make_adhoc_fixture(const AdhocFixtureOptions& options = {});

struct QaFixtureOptions {
    std::size_t docs = 400;
    std::size_t questions = 20;
    std::uint64_t seed = 11;
};

/// Question answering collection: each question has a one-word gold answer that
/// appears in some, but not all, of the docs about its subject.
SyntheticFixture make_qa_fixture(const QaFixtureOptions& options = {});

/// Writes corpus.jsonl, queries.tsv, qrels.txt and (when any query has answers)
/// answers.jsonl into `dir`.
void write_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir);

SyntheticFixture load_fixture(const std::filesystem::path& dir);

}  // namespace enrichkit
