#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace enrichkit {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Ordered result list for one query; rank of entries[i] is i + 1.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    /// 1-based rank, or nullopt when absent.
    std::optional<std::size_t> rank_of(const std::string& doc_id) const;
    RankedList head(std::size_t depth) const;

    bool operator==(const RankedList&) const = default;
};

/// Sorts by score descending, then doc_id ascending.
void sort_by_score(std::vector<ScoredDoc>& entries);

/// TREC run lines "query_id Q0 doc_id rank score run_tag". Scores are written with
/// enough digits to round-trip.
void write_trec_run(std::ostream& out, const RankedList& list, const std::string& run_tag);
void write_trec_run(const std::filesystem::path& path, const std::vector<RankedList>& lists, const std::string& run_tag);

/// Reads a run file; lines are grouped per query and ordered by rank column.
std::map<std::string, RankedList> read_trec_run(const std::filesystem::path& path);

}  // namespace enrichkit
