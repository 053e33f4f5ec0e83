#include "enrichkit/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "enrichkit/error.hpp"
#include "enrichkit/random.hpp"

namespace enrichkit {

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of empty list");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

namespace {

double gain(int grade) {
    return std::exp2(static_cast<double>(grade)) - 1.0;
}

int grade_of(const Qrels& qrels, const std::string& doc_id) {
    auto it = qrels.find(doc_id);
    return it == qrels.end() ? 0 : it->second;
}

}  // namespace

double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); i++)
        dcg += gain(grade_of(qrels, ranked.entries[i].doc_id)) / std::log2(static_cast<double>(i) + 2.0);

    std::vector<int> grades;
    for (const auto& [id, g] : qrels)
        if (g > 0) grades.push_back(g);
    std::sort(grades.rbegin(), grades.rend());
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, grades.size()); i++)
        ideal += gain(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

double map_at_k(const RankedList& ranked, const Qrels& qrels, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    std::size_t total_relevant = 0;
    for (const auto& [id, g] : qrels) total_relevant += g >= kRelevantGrade ? 1 : 0;
    if (total_relevant == 0) return 0.0;
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); i++) {
        if (grade_of(qrels, ranked.entries[i].doc_id) >= kRelevantGrade) {
            hits++;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min(k, total_relevant));
}

RankStats rank_stats(const std::map<std::string, RankedList>& rankings, const QuerySet& queries,
                     const std::map<std::string, std::string>& generated, const RankStatsOptions& options) {
    if (rankings.empty()) throw Error(ErrorCode::InvalidArgument, "rank_stats needs at least one query");
    RankStats stats;
    stats.missing_rank = options.missing_rank;
    std::vector<double> mg, me, hr;
    std::set<std::string> generated_ids;
    for (const auto& [qid, id] : generated) generated_ids.insert(id);
    for (const auto& [qid, list] : rankings) {
        stats.queries++;
        const QueryRecord* q = queries.contains(qid) ? &queries.at(qid) : nullptr;
        const std::size_t limit = std::min(options.depth, list.size());

        if (auto g = generated.find(qid); g != generated.end()) {
            double rank = static_cast<double>(options.missing_rank);
            for (std::size_t i = 0; i < limit; i++)
                if (list.entries[i].doc_id == g->second) {
                    rank = static_cast<double>(i + 1);
                    break;
                }
            mg.push_back(rank);
        } else {
            stats.queries_without_generated++;
        }

        std::vector<double> ranks;
        if (q) {
            for (std::size_t i = 0; i < limit; i++) {
                const auto& id = list.entries[i].doc_id;
                if (!generated_ids.contains(id) && q->is_relevant(id)) ranks.push_back(static_cast<double>(i + 1));
            }
        }
        if (ranks.empty()) {
            stats.queries_without_relevant++;
            continue;
        }
        hr.push_back(ranks.front());
        me.push_back(median(std::move(ranks)));
    }
    if (!mg.empty()) stats.mg = median(std::move(mg));
    if (!me.empty()) stats.me = median(std::move(me));
    if (!hr.empty()) stats.hr = median(std::move(hr));
    return stats;
}

SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_permutations,
                                    std::uint64_t seed, double alpha) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "permutation test needs at least 2 pairs");
    if (n_permutations == 0) throw Error(ErrorCode::InvalidArgument, "n_permutations must be >= 1");

    const std::size_t n = a.size();
    std::vector<double> diff(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; i++) {
        diff[i] = a[i] - b[i];
        sum += diff[i];
    }
    // Compare sums rather than means; a relative tolerance absorbs the rounding
    // differences between sign-flipped sums that are equal in exact arithmetic.
    const double observed = std::abs(sum);
    double scale = 0.0;
    for (double d : diff) scale += std::abs(d);
    const double tolerance = 1e-12 * scale;

    Rng rng(seed);
    std::size_t extreme = 0;
    for (std::size_t p = 0; p < n_permutations; p++) {
        double s = 0.0;
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; i++) {
            if (i % 64 == 0) bits = rng();
            s += (bits & 1) ? -diff[i] : diff[i];
            bits >>= 1;
        }
        if (std::abs(s) >= observed - tolerance) extreme++;
    }
    SignificanceResult r;
    r.statistic = sum / static_cast<double>(n);
    r.n_permutations = n_permutations;
    r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(n_permutations + 1);
    r.significant = r.p_value < alpha;
    return r;
}

double free_marginal_kappa(const std::vector<std::vector<int>>& ratings, int n_categories) {
    if (n_categories < 2) throw Error(ErrorCode::DegenerateCategories, "need at least 2 categories");
    if (ratings.empty()) throw Error(ErrorCode::InvalidArgument, "no items");
    const std::size_t raters = ratings.front().size();
    if (raters < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 raters");
    double agreement = 0.0;
    for (const auto& item : ratings) {
        if (item.size() != raters) throw Error(ErrorCode::InvalidArgument, "ragged ratings matrix");
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_categories), 0);
        for (int r : item) {
            if (r < 1 || r > n_categories)
                throw Error(ErrorCode::InvalidArgument, "rating " + std::to_string(r) + " outside 1.." +
                                                            std::to_string(n_categories));
            counts[static_cast<std::size_t>(r - 1)]++;
        }
        double pairs = 0.0;
        for (auto c : counts)
            if (c > 1) pairs += static_cast<double>(c) * static_cast<double>(c - 1);
        agreement += pairs / (static_cast<double>(raters) * static_cast<double>(raters - 1));
    }
    const double po = agreement / static_cast<double>(ratings.size());
    const double pe = 1.0 / n_categories;
    return (po - pe) / (1.0 - pe);
}

}  // namespace enrichkit
