// Command-line front end: one subcommand per experiment step, each driven by a
// JSON run config with optional flag overrides.
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "enrichkit/commands.hpp"
#include "enrichkit/error.hpp"
#include "enrichkit/synthetic.hpp"

namespace {

struct Common {
    std::string config;
    std::string out_dir;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string transcript;
    std::string transcript_dir;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "JSON run config")->check(CLI::ExistingFile);
    cmd->add_option("-o,--out-dir", c.out_dir, "Output directory (overrides out_dir)");
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--workers", c.workers, "Worker threads");
    cmd->add_option("--transcript", c.transcript, "Gateway transcript mode: off, record, replay");
    cmd->add_option("--transcript-dir", c.transcript_dir, "Directory holding gateway transcripts");
    cmd->add_option("--set", c.sets, "Config override key.path=value (repeatable)");
}

int run(const std::string& name, const Common& c) {
    using nlohmann::json;
    json config = json::object();
    try {
        if (!c.config.empty()) config = enrichkit::load_config(c.config);
        for (const auto& s : c.sets) enrichkit::apply_override(config, s);
    } catch (const enrichkit::Error& e) {
        std::cerr << json{{"error", "Config"}, {"detail", e.detail()}}.dump() << '\n';
        return enrichkit::kExitValidation;
    }
    if (!c.out_dir.empty()) config["out_dir"] = c.out_dir;
    if (c.seed) config["seed"] = *c.seed;
    if (c.workers) config["workers"] = *c.workers;
    if (!c.transcript.empty()) config["gateway"]["transcript"] = c.transcript;
    if (!c.transcript_dir.empty()) config["gateway"]["transcript_dir"] = c.transcript_dir;

    auto result = enrichkit::run_command(name, config);
    if (result.error) {
        std::cerr << result.error->dump() << '\n';
    } else {
        for (const auto& a : result.artifacts) std::cout << a << '\n';
    }
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Corpus enrichment and retrieval evaluation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(enrichkit::library_version()));

    std::map<std::string, Common> common;
    const std::map<std::string, std::string> help = {
        {"index", "Build the BM25 index and write the baseline run"},
        {"enrich", "Generate one document per query for each configured method"},
        {"adhoc", "Rank with and without enrichment; MG/ME/HR, NDCG and MAP report"},
        {"faithfulness", "Knowledge-base faithfulness of generated docs and the RD baseline"},
        {"rag", "Answer questions with and without retrieved passages"},
        {"attribution", "Attribution matrix over RAG and attribution corpora"},
        {"significance", "Paired permutation test between two run files"},
    };
    for (auto name : enrichkit::kCommandNames) {
        std::string n(name);
        add_common(app.add_subcommand(n, help.at(n)), common[n]);
    }

    std::string synth_kind = "adhoc", synth_dir;
    std::size_t synth_docs = 0, synth_queries = 0;
    std::uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic fixture");
    synth->add_option("kind", synth_kind, "adhoc or qa")->check(CLI::IsMember({"adhoc", "qa"}));
    synth->add_option("-o,--out-dir", synth_dir, "Fixture directory")->required();
    synth->add_option("--docs", synth_docs, "Number of documents");
    synth->add_option("--queries", synth_queries, "Number of queries");
    synth->add_option("--seed", synth_seed, "Seed")->each([&](const std::string&) { synth_seed_set = true; });

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        try {
            enrichkit::SyntheticFixture fx;
            if (synth_kind == "adhoc") {
                enrichkit::AdhocFixtureOptions o;
                if (synth_docs) o.docs = synth_docs;
                if (synth_queries) o.queries = synth_queries;
                if (synth_seed_set) o.seed = synth_seed;
                fx = enrichkit::make_adhoc_fixture(o);
            } else {
                enrichkit::QaFixtureOptions o;
                if (synth_docs) o.docs = synth_docs;
                if (synth_queries) o.questions = synth_queries;
                if (synth_seed_set) o.seed = synth_seed;
                fx = enrichkit::make_qa_fixture(o);
            }
            enrichkit::write_fixture(fx, synth_dir);
        } catch (const enrichkit::Error& e) {
            std::cerr << nlohmann::json{{"error", std::string(enrichkit::to_string(e.code()))}, {"detail", e.detail()}}.dump()
                      << '\n';
            return enrichkit::kExitValidation;
        }
        return 0;
    }
    for (auto name : enrichkit::kCommandNames) {
        std::string n(name);
        if (app.got_subcommand(n)) return run(n, common[n]);
    }
    return enrichkit::kExitValidation;
}
