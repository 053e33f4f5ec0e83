#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enrichkit/corpus.hpp"
#include "enrichkit/ranking.hpp"

namespace enrichkit {

/// Median; the mean of the two middle values for even sizes. Empty input is an error.
double median(std::vector<double> values);

/// Graded NDCG with gain 2^grade - 1 and a log2(rank + 1) discount, normalised by
/// the ideal ordering of all judged documents. 0 when the ideal DCG is 0.
double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, std::size_t k);

/// Average precision over the top k with binary relevance (grade >= 2), divided
/// by min(k, number of relevant docs). 0 when nothing is relevant.
double map_at_k(const RankedList& ranked, const Qrels& qrels, std::size_t k);

struct RankStatsOptions {
    std::size_t depth = 10000;
    std::size_t missing_rank = 20000;
};

struct RankStats {
    std::optional<double> mg;  // absent when no query has a generated doc
    std::optional<double> me;
    std::optional<double> hr;
    std::size_t missing_rank = 20000;
    std::size_t queries = 0;
    std::size_t queries_without_generated = 0;
    std::size_t queries_without_relevant = 0;  // skipped for ME/HR
};

/// Rank statistics over queries:
///  - MG: median over queries of the generated doc's rank (missing_rank when it is
///    not within `depth`),
///  - ME: median over queries of the median rank of relevant original docs within
///    `depth`,
///  - HR: median over queries of the best such rank.
/// `rankings` is keyed by query id; `generated` maps query id -> generated doc id.
RankStats rank_stats(const std::map<std::string, RankedList>& rankings, const QuerySet& queries,
                     const std::map<std::string, std::string>& generated, const RankStatsOptions& options = {});

struct SignificanceResult {
    double statistic = 0.0;  // mean(a - b)
    double p_value = 1.0;
    std::size_t n_permutations = 100000;
    bool significant = false;  // at alpha
};

/// Two-tailed paired permutation (sign-flip) test with the add-one estimator
/// p = (1 + #{|stat*| >= |stat|}) / (n_permutations + 1).
SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    std::size_t n_permutations = 100000, std::uint64_t seed = 0, double alpha = 0.05);

/// Free-marginal multi-rater kappa. ratings[item][rater] in 1..n_categories.
double free_marginal_kappa(const std::vector<std::vector<int>>& ratings, int n_categories);

}  // namespace enrichkit
