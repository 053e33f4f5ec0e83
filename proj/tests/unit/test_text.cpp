#include <doctest.h>

#include <fstream>

#include "enrichkit/random.hpp"
#include "enrichkit/text.hpp"
#include "helpers.hpp"

using namespace enrichkit;

TEST_CASE("porter stems match the frozen reference vocabulary") {
    // Produced by tests/oracles/porter_oracle.py (NLTK, Martin's C-compatible mode).
    std::ifstream in(test::data("porter_vocab.tsv"));
    REQUIRE(in);
    std::string line;
    std::size_t checked = 0, wrong = 0;
    while (std::getline(in, line)) {
        auto tab = line.find('\t');
        std::string word = line.substr(0, tab), expect = line.substr(tab + 1);
        if (porter_stem(word) != expect) {
            if (++wrong <= 10) MESSAGE(word << " -> " << porter_stem(word) << ", expected " << expect);
        }
        checked++;
    }
    CHECK(checked > 2000);
    CHECK(wrong == 0);
}

TEST_CASE("porter edge words") {
    CHECK(porter_stem("running") == "run");
    CHECK(porter_stem("runners") == "runner");
    CHECK(porter_stem("ran") == "ran");
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("generalization") == "gener");
    CHECK(porter_stem("happy") == "happi");
    CHECK(porter_stem("sky") == "sky");
    CHECK(porter_stem("is") == "is");
    CHECK(porter_stem("") == "");
}

TEST_CASE("tokenizer lowercases, splits on punctuation and stems") {
    CHECK(tokenize_and_stem("Running, runners RAN!") == std::vector<std::string>{"run", "runner", "ran"});
    CHECK(tokenize_and_stem("COVID-19 vaccines") == std::vector<std::string>{"covid", "19", "vaccin"});
    CHECK(tokenize_and_stem("   ").empty());
    CHECK(tokenize_and_stem("the cats", {.remove_stopwords = true, .stem = true}) == std::vector<std::string>{"cat"});
    CHECK(tokenize_and_stem("The Cats", {.remove_stopwords = false, .stem = false}) ==
          std::vector<std::string>{"the", "cats"});
    // Non-ASCII bytes stay inside words and are never stemmed.
    auto t = tokenize_and_stem("caf\xc3\xa9s open");
    CHECK(t == std::vector<std::string>{"caf\xc3\xa9s", "open"});
}

TEST_CASE("tokenize is idempotent on its own output") {
    for (const char* text : {"Generalization of the relational operators", "hopping-tanned sized; ponies"}) {
        auto once = tokenize_and_stem(text);
        std::string joined;
        for (const auto& t : once) joined += t + " ";
        auto twice = tokenize_and_stem(joined, {.remove_stopwords = false, .stem = false});
        CHECK(once == twice);
    }
}

TEST_CASE("whitespace helpers") {
    CHECK(normalize_whitespace("  a \t b\n\nc  ") == "a b c");
    CHECK(split_words(" one  two\tthree ") == std::vector<std::string>{"one", "two", "three"});
    CHECK(truncate_words("a b c d", 2) == "a b");
    CHECK(truncate_words("a  b", 5) == "a b");
    CHECK(join_words({"x", "y", "z"}, 1, 3) == "y z");
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("uniform_index stays in range and covers it") {
    Rng rng(42);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 7000; i++) seen[uniform_index(rng, 7)]++;
    for (int c : seen) CHECK(c > 800);
    CHECK(uniform_index(rng, 1) == 0);
    CHECK(derive_seed(1, "q1") != derive_seed(1, "q2"));
    CHECK(derive_seed(1, "q1") == derive_seed(1, "q1"));
}
