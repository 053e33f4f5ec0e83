#include "enrichkit/ranking.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "enrichkit/error.hpp"

namespace enrichkit {

std::optional<std::size_t> RankedList::rank_of(const std::string& doc_id) const {
    for (std::size_t i = 0; i < entries.size(); i++)
        if (entries[i].doc_id == doc_id) return i + 1;
    return std::nullopt;
}

RankedList RankedList::head(std::size_t depth) const {
    RankedList out{query_id, {}};
    out.entries.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(depth, entries.size())));
    return out;
}

void sort_by_score(std::vector<ScoredDoc>& entries) {
    std::sort(entries.begin(), entries.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

namespace {

std::string format_score(double score) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), score);
    return std::string(buf, res.ptr);
}

}  // namespace

void write_trec_run(std::ostream& out, const RankedList& list, const std::string& run_tag) {
    for (std::size_t i = 0; i < list.entries.size(); i++)
        out << list.query_id << " Q0 " << list.entries[i].doc_id << ' ' << (i + 1) << ' '
            << format_score(list.entries[i].score) << ' ' << run_tag << '\n';
}

void write_trec_run(const std::filesystem::path& path, const std::vector<RankedList>& lists,
                    const std::string& run_tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& list : lists) write_trec_run(out, list, run_tag);
}

std::map<std::string, RankedList> read_trec_run(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::map<std::string, std::vector<std::pair<long, ScoredDoc>>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::istringstream ss(line);
        std::string qid, q0, doc_id, tag;
        long rank = 0;
        std::string score_text;
        if (!(ss >> qid)) continue;
        if (!(ss >> q0 >> doc_id >> rank >> score_text))
            throw Error(ErrorCode::MalformedRecord, path.string() + " line " + std::to_string(line_no));
        double score = 0.0;
        auto res = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
        if (res.ec != std::errc())
            throw Error(ErrorCode::MalformedRecord, path.string() + " line " + std::to_string(line_no));
        rows[qid].emplace_back(rank, ScoredDoc{doc_id, score});
    }
    std::map<std::string, RankedList> out;
    for (auto& [qid, entries] : rows) {
        std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        RankedList list{qid, {}};
        for (auto& [rank, doc] : entries) list.entries.push_back(std::move(doc));
        out.emplace(qid, std::move(list));
    }
    return out;
}

}  // namespace enrichkit
