#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "enrichkit/bm25.hpp"
#include "enrichkit/commands.hpp"
#include "enrichkit/error.hpp"
#include "enrichkit/faithfulness.hpp"
#include "enrichkit/metrics.hpp"
#include "enrichkit/rag.hpp"
#include "enrichkit/text.hpp"

namespace py = pybind11;
using namespace enrichkit;

namespace {

RankedList ranked_of(const std::vector<std::string>& ids) {
    RankedList list;
    for (std::size_t i = 0; i < ids.size(); i++)
        list.entries.push_back({ids[i], static_cast<double>(ids.size() - i)});
    return list;
}

// Owns its documents so the index's pointers stay valid.
class PyIndex {
public:
    explicit PyIndex(const std::vector<std::pair<std::string, std::string>>& docs) {
        for (const auto& [id, text] : docs) corpus_.add(Document{id, text, std::nullopt, {}});
        index_ = std::make_unique<InvertedIndex>(InvertedIndex::build(plain_view(corpus_)));
    }
    std::vector<std::pair<std::string, double>> search(const std::string& query, std::size_t depth) const {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& e : index_->search(query, depth).entries) out.emplace_back(e.doc_id, e.score);
        return out;
    }
    std::size_t size() const { return corpus_.size(); }

private:
    Corpus corpus_;
    std::unique_ptr<InvertedIndex> index_;
};

}  // namespace

PYBIND11_MODULE(_enrichkit, m) {
    py::register_exception<Error>(m, "EnrichkitError", PyExc_ValueError);

    m.attr("__version__") = std::string(library_version());
    m.attr("COMMANDS") = std::vector<std::string>(std::begin(kCommandNames), std::end(kCommandNames));

    m.def("porter_stem", [](const std::string& w) { return porter_stem(w); });
    m.def("tokenize", [](const std::string& text) { return tokenize_and_stem(text); });
    m.def("segment_sentences", [](const std::string& text) {
        std::vector<std::string> out;
        for (auto& s : segment_sentences(text)) out.push_back(std::move(s.text));
        return out;
    });
    m.def("build_qa_prompt", &build_qa_prompt, py::arg("question"), py::arg("passages") = std::vector<std::string>{});

    m.def("ndcg_at_k", [](const std::vector<std::string>& ranking, const Qrels& qrels, std::size_t k) {
        return ndcg_at_k(ranked_of(ranking), qrels, k);
    });
    m.def("map_at_k", [](const std::vector<std::string>& ranking, const Qrels& qrels, std::size_t k) {
        return map_at_k(ranked_of(ranking), qrels, k);
    });
    m.def(
        "permutation_test",
        [](const std::vector<double>& a, const std::vector<double>& b, std::size_t n, std::uint64_t seed,
           double alpha) {
            auto r = permutation_test(a, b, n, seed, alpha);
            py::dict d;
            d["statistic"] = r.statistic;
            d["p_value"] = r.p_value;
            d["n_permutations"] = r.n_permutations;
            d["significant"] = r.significant;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("n_permutations") = 100000, py::arg("seed") = 0, py::arg("alpha") = 0.05);

    py::class_<PyIndex>(m, "Bm25Index")
        .def(py::init<const std::vector<std::pair<std::string, std::string>>&>(), py::arg("docs"))
        .def("search", &PyIndex::search, py::arg("query"), py::arg("depth") = 10)
        .def("__len__", &PyIndex::size);

    // Configs cross the boundary as JSON text; the Python wrapper handles dicts.
    m.def("_run_command", [](const std::string& name, const std::string& config) {
        CommandResult r;
        {
            py::gil_scoped_release release;
            r = run_command(name, nlohmann::json::parse(config));
        }
        return py::make_tuple(r.exit_code, r.error ? r.error->dump() : std::string(), r.artifacts);
    });
    m.def("_config_hash", [](const std::string& config) { return config_hash(nlohmann::json::parse(config)); });
}
