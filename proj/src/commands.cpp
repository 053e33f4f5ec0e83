#include "enrichkit/commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "enrichkit/attribution.hpp"
#include "enrichkit/bm25.hpp"
#include "enrichkit/corpus.hpp"
#include "enrichkit/dense.hpp"
#include "enrichkit/enrichment.hpp"
#include "enrichkit/error.hpp"
#include "enrichkit/faithfulness.hpp"
#include "enrichkit/gateway.hpp"
#include "enrichkit/metrics.hpp"
#include "enrichkit/parallel.hpp"
#include "enrichkit/random.hpp"
#include "enrichkit/rag.hpp"
#include "enrichkit/text.hpp"

#ifndef ENRICHKIT_VERSION
#define ENRICHKIT_VERSION "0.0.0"
#endif

namespace enrichkit {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view library_version() {
    return ENRICHKIT_VERSION;
}

json load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Config, "cannot read config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, "config " + path.string() + ": " + e.what());
    }
}

void apply_override(json& config, std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw Error(ErrorCode::Config, "override must look like key=value: " + std::string(assignment));
    std::string key(assignment.substr(0, eq));
    std::string raw(assignment.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        auto dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object()) *node = json::object();
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

std::string config_hash(const json& config) {
    json identity = config;
    identity.erase("gateway");
    identity.erase("out_dir");
    return sha256_hex(identity.dump());
}

namespace {

// ---------------------------------------------------------------------------
// Config access

struct Settings {
    json raw;
    fs::path out_dir;
    std::string dataset;
    std::uint64_t seed = 0;
    std::size_t workers = 4;
    std::string model_tag;
    double failure_budget = 0.05;

    bool has(const char* key) const { return raw.contains(key) && !raw[key].is_null(); }

    template <class T>
    T get(const char* key, T fallback) const {
        if (!has(key)) return fallback;
        try {
            return raw[key].get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorCode::Config, std::string("bad value for ") + key);
        }
    }

    fs::path input(const char* key) const {
        if (!has(key)) throw Error(ErrorCode::Config, std::string("missing required key: ") + key);
        fs::path p = get<std::string>(key, "");
        if (!fs::exists(p)) throw Error(ErrorCode::Config, std::string(key) + " path does not exist: " + p.string());
        return p;
    }

    std::optional<fs::path> optional_input(const char* key) const {
        if (!has(key)) return std::nullopt;
        return input(key);
    }
};

Settings read_settings(const json& config) {
    if (!config.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    Settings s;
    s.raw = config;
    if (!s.has("out_dir")) throw Error(ErrorCode::Config, "missing required key: out_dir");
    s.out_dir = s.get<std::string>("out_dir", "");
    s.dataset = s.get<std::string>("dataset", "dataset");
    s.seed = s.get<std::uint64_t>("seed", 0);
    s.workers = s.get<std::size_t>("workers", 4);
    if (s.workers == 0) throw Error(ErrorCode::Config, "workers must be >= 1");
    s.model_tag = s.get<std::string>("model_tag", "mock");
    s.failure_budget = s.get<double>("failure_budget", 0.05);
    return s;
}

std::vector<Method> methods_of(const Settings& s) {
    std::vector<Method> out;
    for (const auto& name : s.get<std::vector<std::string>>("methods", {})) {
        auto m = parse_method(name);
        if (!m) throw Error(ErrorCode::Config, "unknown method: " + name);
        out.push_back(*m);
    }
    return out;
}

Corpus load_originals(const Settings& s, std::vector<std::string>& warnings) {
    fs::path path = s.input("corpus");
    std::string fmt = s.get<std::string>("corpus_format", path.extension() == ".tsv" ? "tsv" : "jsonl");
    if (fmt != "jsonl" && fmt != "tsv") throw Error(ErrorCode::Config, "corpus_format must be jsonl or tsv");
    auto ingested = ingest_corpus(path, fmt == "tsv" ? CorpusFormat::TSV : CorpusFormat::JSONL);
    for (auto& w : ingested.warnings) warnings.push_back(std::move(w));
    for (const auto& d : ingested.corpus.docs())
        if (d.is_generated()) throw Error(ErrorCode::Config, "input corpus already contains generated doc " + d.doc_id);
    return std::move(ingested.corpus);
}

QuerySet load_query_set(const Settings& s, bool need_qrels, bool need_answers) {
    QuerySet queries;
    if (auto q = need_answers ? s.optional_input("queries") : std::optional<fs::path>(s.input("queries")))
        queries = QuerySet::load_queries(*q);
    if (need_qrels) {
        queries.attach_qrels(s.input("qrels"));
    } else if (auto qrels = s.optional_input("qrels")) {
        queries.attach_qrels(*qrels);
    }
    if (need_answers) {
        queries.attach_answers(s.input("answers"));
    } else if (auto answers = s.optional_input("answers")) {
        queries.attach_answers(*answers);
    }
    if (queries.size() == 0) throw Error(ErrorCode::Config, "no queries loaded");
    return queries;
}

// ---------------------------------------------------------------------------
// Output

class Outputs {
public:
    explicit Outputs(fs::path root) : root_(std::move(root)) {
        for (const char* sub : {"runs", "reports", "transcripts", "manifests"}) fs::create_directories(root_ / sub);
    }

    const fs::path& root() const { return root_; }

    std::ofstream open(const std::string& rel) {
        std::ofstream out(root_ / rel, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + (root_ / rel).string());
        artifacts_.push_back(rel);
        return out;
    }

    void write_text(const std::string& rel, const std::string& text) { open(rel) << text; }

    void add_existing(const std::string& rel) { artifacts_.push_back(rel); }
    const std::vector<std::string>& artifacts() const { return artifacts_; }

private:
    fs::path root_;
    std::vector<std::string> artifacts_;
};

std::string fmt(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string fmt_rank(std::optional<double> v) {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", *v);
    return buf;
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

// ---------------------------------------------------------------------------
// Gateway

fs::path transcript_path(const Settings& s, std::string_view command) {
    json g = s.raw.value("gateway", json::object());
    fs::path dir = g.contains("transcript_dir") ? fs::path(g["transcript_dir"].get<std::string>())
                                                : s.out_dir / "transcripts";
    return dir / (std::string(command) + ".jsonl");
}

std::unique_ptr<ModelGateway> make_gateway(const Settings& s, std::string_view command) {
    json g = s.raw.value("gateway", json::object());
    if (!g.is_object()) throw Error(ErrorCode::Config, "gateway must be an object");
    GatewayConfig gc;
    gc.base_url = g.value("base_url", gc.base_url);
    gc.timeout_seconds = g.value("timeout_seconds", gc.timeout_seconds);
    gc.max_concurrent = g.value("max_concurrent", gc.max_concurrent);
    gc.retries = g.value("retries", gc.retries);
    auto mode = parse_transcript_mode(g.value("transcript", std::string("off")));
    if (!mode) throw Error(ErrorCode::Config, "gateway.transcript must be off, record or replay");
    gc.transcript_mode = *mode;
    if (gc.transcript_mode != TranscriptMode::Off) {
        gc.record_replay_path = transcript_path(s, command);
        if (gc.transcript_mode == TranscriptMode::Replay && !fs::exists(*gc.record_replay_path))
            throw Error(ErrorCode::Config, "replay transcript does not exist: " + gc.record_replay_path->string());
    }

    std::shared_ptr<Backend> backend;
    // Replay runs with the network disabled: no backend at all.
    if (gc.transcript_mode != TranscriptMode::Replay) {
        std::string kind = g.value("backend", std::string("mock"));
        if (kind == "mock") {
            backend = std::make_shared<MockBackend>(mock_config_from_json(g.value("mock", json::object())));
        } else if (kind == "http") {
            backend = std::make_shared<HttpBackend>(HttpBackendConfig{gc.base_url, gc.timeout_seconds});
        } else {
            throw Error(ErrorCode::Config, "gateway.backend must be mock or http");
        }
    }
    return std::make_unique<ModelGateway>(std::move(backend), gc);
}

// ---------------------------------------------------------------------------
// Manifests

void write_manifest(Outputs& out, const Settings& s, std::string_view command, json extra) {
    json m = {
        {"command", command},
        {"dataset", s.dataset},
        {"config_hash", config_hash(s.raw)},
        {"seed", s.seed},
        {"versions", {{"enrichkit", library_version()}, {"model_tag", s.model_tag}}},
    };
    for (auto& [k, v] : extra.items()) m[k] = v;
    m["artifacts"] = out.artifacts();
    std::ofstream f(out.root() / "manifests" / (std::string(command) + ".json"), std::ios::binary | std::ios::trunc);
    f << m.dump(2) << '\n';
}

void check_budget(std::size_t failures, std::size_t total, double budget, std::string_view what) {
    if (total == 0 || failures == 0) return;
    double rate = static_cast<double>(failures) / static_cast<double>(total);
    if (rate > budget)
        throw Error(ErrorCode::BackendError, std::string(what) + ": " + std::to_string(failures) + " of " +
                                                 std::to_string(total) + " failed, over the failure budget");
}

// ---------------------------------------------------------------------------
// Shared retrieval helpers

std::string generated_path_for(const Settings& s, Method m) {
    json g = s.raw.value("generated", json::object());
    std::string name(method_name(m));
    if (g.contains(name)) return g[name].get<std::string>();
    return (s.out_dir / "runs" / ("generated-" + name + "-" + s.model_tag + ".jsonl")).string();
}

/// Originals plus the generated documents of one method.
Corpus enriched_corpus(const Settings& s, const Corpus& originals, Method m) {
    fs::path path = generated_path_for(s, m);
    if (!fs::exists(path))
        throw Error(ErrorCode::Config, "generated corpus for " + std::string(method_name(m)) +
                                           " does not exist: " + path.string() + " (run enrich first)");
    Corpus combined(originals.id() + "+" + std::string(method_name(m)));
    for (const auto& d : originals.docs()) combined.add(d);
    auto generated = ingest_corpus(path, CorpusFormat::JSONL);
    for (const auto& d : generated.corpus.docs()) {
        if (!d.is_generated() || d.provenance.method != m)
            throw Error(ErrorCode::MalformedRecord, path.string() + ": " + d.doc_id + " is not a " +
                                                        std::string(method_name(m)) + " generated document");
        combined.add(d);
    }
    return combined;
}

std::map<std::string, std::string> generated_ids(const Corpus& corpus) {
    std::map<std::string, std::string> out;
    for (const auto& d : corpus.docs())
        if (d.is_generated() && d.provenance.query_id) out[*d.provenance.query_id] = d.doc_id;
    return out;
}

/// Per-query BM25 indexes over originals plus that query's generated docs; the
/// plain index is reused for queries without one.
class PerQueryIndexes {
public:
    PerQueryIndexes(const Corpus& corpus, std::shared_ptr<const InvertedIndex> plain, const QuerySet& queries,
                    std::size_t workers)
        : plain_(std::move(plain)) {
        auto gen = generated_ids(corpus);
        std::vector<std::string> qids;
        for (const auto& q : queries.records())
            if (gen.contains(q.query_id)) qids.push_back(q.query_id);
        std::vector<std::shared_ptr<const InvertedIndex>> built(qids.size());
        parallel_for(qids.size(), workers, [&](std::size_t i) {
            built[i] = std::make_shared<const InvertedIndex>(InvertedIndex::build(query_view(corpus, qids[i])));
        });
        for (std::size_t i = 0; i < qids.size(); i++) by_query_[qids[i]] = built[i];
    }

    std::shared_ptr<const InvertedIndex> operator()(const QueryRecord& q) const {
        auto it = by_query_.find(q.query_id);
        return it == by_query_.end() ? plain_ : it->second;
    }

private:
    std::shared_ptr<const InvertedIndex> plain_;
    std::map<std::string, std::shared_ptr<const InvertedIndex>> by_query_;
};

std::map<std::string, RankedList> search_all(const QuerySet& queries, const IndexProvider& index_for,
                                             std::size_t depth, std::size_t workers) {
    const auto& records = queries.records();
    std::vector<RankedList> lists(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
        try {
            lists[i] = index_for(records[i])->search(records[i].text, depth, records[i].query_id);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyQueryAfterStemming) throw;
            lists[i].query_id = records[i].query_id;
        }
    });
    std::map<std::string, RankedList> out;
    for (auto& l : lists) out[l.query_id] = std::move(l);
    return out;
}

void write_runs(Outputs& out, const std::string& rel, const std::map<std::string, RankedList>& runs,
                const std::string& tag) {
    auto f = out.open(rel);
    for (const auto& [qid, list] : runs) write_trec_run(f, list, tag);
}

std::string significance_mark(std::span<const double> a, std::span<const double> b, const Settings& s,
                              const char* mark) {
    if (a.size() < 2) return "";
    auto n = s.get<std::size_t>("permutations", 100000);
    return permutation_test(a, b, n, s.seed).significant ? mark : "";
}

std::shared_ptr<const InvertedIndex> plain_index(const Corpus& originals) {
    return std::make_shared<const InvertedIndex>(InvertedIndex::build(plain_view(originals)));
}

// ---------------------------------------------------------------------------
// index

CommandResult cmd_index(const Settings& s) {
    std::vector<std::string> warnings;
    Corpus corpus = load_originals(s, warnings);
    QuerySet queries = load_query_set(s, false, false);
    Outputs out(s.out_dir);
    auto index = plain_index(corpus);
    auto depth = s.get<std::size_t>("depth", 10000);
    auto runs = search_all(queries, [&](const QueryRecord&) { return index; }, depth, s.workers);
    write_runs(out, "runs/bm25.run", runs, "bm25");
    write_manifest(out, s, "index",
                   {{"documents", index->stats().doc_count},
                    {"terms", index->term_count()},
                    {"avg_doc_len", index->stats().avg_doc_len},
                    {"depth", depth},
                    {"warnings", warnings}});
    return {kExitOk, std::nullopt, out.artifacts()};
}

// ---------------------------------------------------------------------------
// enrich

LengthPolicy length_policy_of(const Settings& s) {
    json p = s.raw.value("length_policy", json("off"));
    if (p.is_string()) {
        if (p == "off") return LengthPolicy::off();
        if (p == "truncate") return LengthPolicy{};
        throw Error(ErrorCode::Config, "length_policy must be off, truncate or an object");
    }
    LengthPolicy policy;
    policy.max_words = p.value("max_words", policy.max_words);
    policy.min_words = p.value("min_words", policy.min_words);
    policy.mode = p.value("mode", std::string("truncate")) == "off" ? LengthMode::Off : LengthMode::TruncateAndDiscard;
    policy.validate();
    return policy;
}

CommandResult cmd_enrich(const Settings& s) {
    std::vector<std::string> warnings;
    Corpus corpus = load_originals(s, warnings);
    std::string selection = s.get<std::string>("selection", "adhoc");
    if (selection != "adhoc" && selection != "rag") throw Error(ErrorCode::Config, "selection must be adhoc or rag");
    QuerySet queries = load_query_set(s, selection == "adhoc", selection == "rag");
    auto methods = methods_of(s);
    if (methods.empty()) throw Error(ErrorCode::Config, "enrich needs at least one method");
    auto match = parse_answer_match(s.get<std::string>("answer_match", "normalized"));
    if (!match) throw Error(ErrorCode::Config, "answer_match must be normalized, raw or word");

    Outputs out(s.out_dir);
    auto gateway = make_gateway(s, "enrich");
    auto index = InvertedIndex::build(plain_view(corpus));
    json per_method = json::object();
    std::size_t failures = 0, attempted = 0;
    for (Method m : methods) {
        EnrichmentConfig ec;
        ec.method = m;
        ec.model_tag = s.model_tag;
        ec.selection = selection == "rag" ? SelectionMode::Rag : SelectionMode::AdHoc;
        ec.policy = length_policy_of(s);
        ec.seed = s.seed;
        ec.workers = s.workers;
        ec.candidate_depth = s.get<std::size_t>("candidate_depth", 1000);
        ec.match = *match;
        ec.max_tokens = s.get<int>("max_tokens", 512);
        auto result = enrich_corpus(corpus, queries, index, ec, *gateway);
        failures += result.failures();
        attempted += result.statuses.size();
        std::string name(method_name(m));
        {
            auto f = out.open("runs/generated-" + name + "-" + s.model_tag + ".jsonl");
            for (const auto& d : result.generated) f << json(d).dump() << '\n';
        }
        per_method[name] = result.manifest(ec);
    }
    gateway->flush_transcript();
    write_manifest(out, s, "enrich",
                   {{"selection", selection},
                    {"methods", per_method},
                    {"failures", failures},
                    {"gateway_warnings", gateway->warnings()},
                    {"warnings", warnings}});
    check_budget(failures, attempted, s.failure_budget, "generation");
    return {kExitOk, std::nullopt, out.artifacts()};
}

// ---------------------------------------------------------------------------
// adhoc

struct QueryEval {
    double ndcg10 = 0, ndcg100 = 0, map100 = 0;
};

std::map<std::string, QueryEval> evaluate(const std::map<std::string, RankedList>& runs, const QuerySet& queries,
                                          const std::map<std::string, std::string>& generated,
                                          std::optional<int> generated_grade) {
    std::map<std::string, QueryEval> out;
    for (const auto& q : queries.records()) {
        Qrels qrels = q.qrels;
        if (generated_grade) {
            auto g = generated.find(q.query_id);
            if (g != generated.end()) qrels[g->second] = *generated_grade;
        }
        auto it = runs.find(q.query_id);
        RankedList empty{q.query_id, {}};
        const RankedList& r = it == runs.end() ? empty : it->second;
        out[q.query_id] = {ndcg_at_k(r, qrels, 10), ndcg_at_k(r, qrels, 100), map_at_k(r, qrels, 100)};
    }
    return out;
}

struct RankerSpec {
    std::string name;  // "bm25" or "dense"
    std::string embed_model;
};

std::vector<RankerSpec> rankers_of(const Settings& s) {
    std::vector<RankerSpec> out;
    for (const auto& r : s.get<std::vector<std::string>>("rankers", {"bm25"})) {
        if (r == "bm25") {
            out.push_back({"bm25", ""});
        } else if (r.starts_with("dense")) {
            // "dense" or "dense:<embedding model tag>"
            auto colon = r.find(':');
            out.push_back({r, colon == std::string::npos ? s.get<std::string>("embed_model", "mock-embed")
                                                         : r.substr(colon + 1)});
        } else {
            throw Error(ErrorCode::Config, "unknown ranker: " + r);
        }
    }
    if (out.empty()) throw Error(ErrorCode::Config, "rankers must not be empty");
    return out;
}

/// Dense re-ranking runs query by query so the embedding batches, and hence the
/// transcript keys, do not depend on thread timing.
std::map<std::string, RankedList> dense_rerank(const std::map<std::string, RankedList>& bm25, const QuerySet& queries,
                                               const Corpus& corpus, DenseEncoder& encoder, std::size_t m) {
    std::map<std::string, RankedList> out;
    auto lookup = [&](const std::string& id) { return corpus.find(id); };
    for (const auto& q : queries.records()) {
        const RankedList& list = bm25.at(q.query_id);
        out[q.query_id] = list.empty() ? list : encoder.rerank(list, q.text, std::min(m, list.size()), lookup);
    }
    return out;
}

std::vector<double> column(const std::map<std::string, QueryEval>& e, double QueryEval::*field) {
    std::vector<double> v;
    for (const auto& [qid, q] : e) v.push_back(q.*field);
    return v;
}

CommandResult cmd_adhoc(const Settings& s) {
    std::vector<std::string> warnings;
    Corpus originals = load_originals(s, warnings);
    QuerySet queries = load_query_set(s, true, false);
    auto methods = methods_of(s);
    auto rankers = rankers_of(s);
    auto depth = s.get<std::size_t>("depth", 10000);
    auto rerank_depth = s.get<std::size_t>("rerank_depth", depth);
    std::optional<int> generated_grade;
    if (s.has("generated_grade")) generated_grade = s.get<int>("generated_grade", 0);
    RankStatsOptions rso{depth, s.get<std::size_t>("missing_rank", 20000)};

    std::vector<Corpus> enriched;
    for (Method m : methods) enriched.push_back(enriched_corpus(s, originals, m));

    Outputs out(s.out_dir);
    std::unique_ptr<ModelGateway> gateway;
    EmbeddingCache cache;
    std::optional<fs::path> cache_path;
    if (s.has("embedding_cache")) {
        cache_path = s.get<std::string>("embedding_cache", "");
        cache = EmbeddingCache::load(*cache_path);
    }
    bool any_dense = false;
    for (const auto& r : rankers) any_dense = any_dense || r.name != "bm25";
    if (any_dense) gateway = make_gateway(s, "adhoc");

    auto plain = plain_index(originals);
    auto plain_bm25 = search_all(queries, [&](const QueryRecord&) { return plain; }, depth, s.workers);
    std::vector<std::map<std::string, RankedList>> enriched_bm25;
    for (const auto& c : enriched) {
        PerQueryIndexes per_query(c, plain, queries, s.workers);
        enriched_bm25.push_back(search_all(queries, std::cref(per_query), depth, s.workers));
    }

    std::string csv = "dataset,method,model,ranker,MG,MG_marks,ME,HR,NDCG@10,NDCG@10_sig,NDCG@100,NDCG@100_sig,"
                      "MAP@100,MAP@100_sig\n";
    json rows = json::array();
    for (const auto& ranker : rankers) {
        std::unique_ptr<DenseEncoder> encoder;
        if (ranker.name != "bm25") encoder = std::make_unique<DenseEncoder>(*gateway, cache, ranker.embed_model);
        auto rank_runs = [&](const std::map<std::string, RankedList>& bm25, const Corpus& c) {
            return encoder ? dense_rerank(bm25, queries, c, *encoder, rerank_depth) : bm25;
        };
        std::string rtag = ranker.name == "bm25" ? "bm25" : "dense-" + ranker.embed_model;

        auto plain_runs = rank_runs(plain_bm25, originals);
        write_runs(out, "runs/adhoc-" + rtag + "-NoEnrich.run", plain_runs, rtag);
        auto base_stats = rank_stats(plain_runs, queries, {}, rso);
        auto base_eval = evaluate(plain_runs, queries, {}, std::nullopt);
        // Per-query reference ranks for the MG comparisons.
        std::map<std::string, double> q_median, q_best;
        for (const auto& q : queries.records()) {
            std::vector<double> ranks;
            const auto& list = plain_runs.at(q.query_id);
            for (std::size_t i = 0; i < list.size() && i < depth; i++)
                if (q.is_relevant(list.entries[i].doc_id)) ranks.push_back(static_cast<double>(i + 1));
            if (!ranks.empty()) {
                q_median[q.query_id] = median(ranks);
                q_best[q.query_id] = ranks.front();
            }
        }
        auto mean_of = [](const std::vector<double>& v) {
            double t = 0;
            for (double x : v) t += x;
            return v.empty() ? 0.0 : t / static_cast<double>(v.size());
        };
        auto b10 = column(base_eval, &QueryEval::ndcg10), b100 = column(base_eval, &QueryEval::ndcg100),
             bmap = column(base_eval, &QueryEval::map100);
        csv += s.dataset + ",NoEnrich,," + rtag + ",,," + fmt_rank(base_stats.me) + "," + fmt_rank(base_stats.hr) +
               "," + fmt(mean_of(b10)) + ",," + fmt(mean_of(b100)) + ",," + fmt(mean_of(bmap)) + ",\n";
        rows.push_back({{"dataset", s.dataset}, {"method", "NoEnrich"}, {"model", nullptr}, {"ranker", rtag},
                        {"ME", opt_json(base_stats.me)}, {"HR", opt_json(base_stats.hr)},
                        {"NDCG@10", mean_of(b10)}, {"NDCG@100", mean_of(b100)}, {"MAP@100", mean_of(bmap)},
                        {"queries_without_relevant", base_stats.queries_without_relevant}});

        for (std::size_t mi = 0; mi < methods.size(); mi++) {
            std::string mname(method_name(methods[mi]));
            auto gen = generated_ids(enriched[mi]);
            auto runs = rank_runs(enriched_bm25[mi], enriched[mi]);
            write_runs(out, "runs/adhoc-" + rtag + "-" + mname + ".run", runs, rtag);
            auto stats = rank_stats(runs, queries, gen, rso);
            auto eval = evaluate(runs, queries, gen, generated_grade);

            std::vector<double> g_for_m, m_ref, g_for_h, h_ref;
            for (const auto& [qid, gid] : gen) {
                if (!runs.contains(qid)) continue;
                auto r = runs.at(qid).head(depth).rank_of(gid);
                double g = r ? static_cast<double>(*r) : static_cast<double>(rso.missing_rank);
                if (q_median.contains(qid)) {
                    g_for_m.push_back(g);
                    m_ref.push_back(q_median[qid]);
                    g_for_h.push_back(g);
                    h_ref.push_back(q_best[qid]);
                }
            }
            std::string marks = significance_mark(g_for_m, m_ref, s, "m") + significance_mark(g_for_h, h_ref, s, "h");
            auto e10 = column(eval, &QueryEval::ndcg10), e100 = column(eval, &QueryEval::ndcg100),
                 emap = column(eval, &QueryEval::map100);
            std::string s10 = significance_mark(e10, b10, s, "*"), s100 = significance_mark(e100, b100, s, "*"),
                        smap = significance_mark(emap, bmap, s, "*");
            csv += s.dataset + "," + mname + "," + s.model_tag + "," + rtag + "," + fmt_rank(stats.mg) + "," + marks +
                   ",,," + fmt(mean_of(e10)) + "," + s10 + "," + fmt(mean_of(e100)) + "," + s100 + "," +
                   fmt(mean_of(emap)) + "," + smap + "\n";
            json per_query = json::object();
            for (const auto& [qid, e] : eval)
                per_query[qid] = {{"NDCG@10", e.ndcg10}, {"NDCG@100", e.ndcg100}, {"MAP@100", e.map100},
                                  {"NoEnrich_NDCG@10", base_eval.at(qid).ndcg10}};
            rows.push_back({{"dataset", s.dataset}, {"method", mname}, {"model", s.model_tag}, {"ranker", rtag},
                            {"MG", opt_json(stats.mg)}, {"MG_marks", marks},
                            {"NDCG@10", mean_of(e10)}, {"NDCG@10_sig", s10},
                            {"NDCG@100", mean_of(e100)}, {"NDCG@100_sig", s100},
                            {"MAP@100", mean_of(emap)}, {"MAP@100_sig", smap},
                            {"queries_without_generated", stats.queries_without_generated},
                            {"per_query", per_query}});
        }
    }
    out.write_text("reports/adhoc.csv", csv);
    out.write_text("reports/adhoc.json", json{{"rows", rows}}.dump(2) + "\n");
    if (cache_path) cache.save(*cache_path);
    json extra = {{"warnings", warnings}, {"generated_grade", generated_grade ? json(*generated_grade) : json(nullptr)}};
    if (gateway) {
        gateway->flush_transcript();
        extra["gateway_warnings"] = gateway->warnings();
    }
    write_manifest(out, s, "adhoc", extra);
    return {kExitOk, std::nullopt, out.artifacts()};
}

// ---------------------------------------------------------------------------
// faithfulness

CommandResult cmd_faithfulness(const Settings& s) {
    std::vector<std::string> warnings;
    Corpus originals = load_originals(s, warnings);
    QuerySet queries = load_query_set(s, true, false);
    auto methods = methods_of(s);
    if (methods.empty()) throw Error(ErrorCode::Config, "faithfulness needs at least one method");
    auto ks = s.get<std::vector<std::size_t>>("k_values", {1, 5});
    for (auto k : ks)
        if (k == 0) throw Error(ErrorCode::Config, "k values must be >= 1");
    auto depth = s.get<std::size_t>("candidate_depth", 1000);
    auto samples_cfg = s.get<std::vector<std::string>>("samples", {"rel", "corpus"});

    Outputs out(s.out_dir);
    auto gateway = make_gateway(s, "faithfulness");
    NliCache nli_cache(gateway_nli(*gateway));
    NliFunction nli = nli_cache.as_function();

    auto plain = plain_index(originals);
    auto ranked = search_all(queries, [&](const QueryRecord&) { return plain; }, depth, s.workers);
    auto docs_of = [&](const std::vector<std::string>& ids) {
        std::vector<const Document*> v;
        for (const auto& id : ids)
            if (const Document* d = originals.find(id)) v.push_back(d);
        return v;
    };

    std::vector<SampleTag> tags;
    for (const auto& t : samples_cfg) {
        if (t == "rel") tags.push_back(SampleTag::Rel);
        else if (t == "corpus") tags.push_back(SampleTag::Corpus);
        else throw Error(ErrorCode::Config, "unknown sample: " + t);
    }

    // RD baseline, shared by all methods: (tag, k) -> query -> score.
    std::map<std::pair<SampleTag, std::size_t>, std::map<std::string, double>> rd;
    json rd_rows = json::array();
    for (const auto& q : queries.records()) {
        if (q.relevant_ids().empty()) continue;
        const auto& list = ranked.at(q.query_id);
        auto samples = build_samples(q, list, {}, depth);
        for (SampleTag tag : tags) {
            for (auto k : ks) {
                RdBaseline base;
                try {
                    base = rd_baseline(originals, q, list, tag == SampleTag::Rel ? samples.rel : samples.corpus,
                                       derive_seed(s.seed, q.query_id + "/rd"), k, nli, s.workers);
                } catch (const Error& e) {
                    // Every relevant doc was picked, leaving nothing to entail against.
                    if (e.code() != ErrorCode::NoRelevantDocs) throw;
                    continue;
                }
                if (base.selected.empty()) continue;
                rd[{tag, k}][q.query_id] = base.score;
                rd_rows.push_back({{"query_id", q.query_id}, {"sample", to_string(tag)}, {"k", k},
                                   {"score", base.score}, {"selected", base.selected}, {"per_doc", base.per_doc},
                                   {"shortfall", base.shortfall}});
            }
        }
    }

    std::string csv = "dataset,method,model,sample,k,score,RD,sig,documents\n";
    {
        auto reports = out.open("reports/faithfulness.jsonl");
        for (Method m : methods) {
            Corpus c = enriched_corpus(s, originals, m);
            std::map<std::pair<SampleTag, std::size_t>, std::map<std::string, double>> scores;
            auto gen = generated_ids(c);
            for (const auto& q : queries.records()) {
                if (!gen.contains(q.query_id) || q.relevant_ids().empty()) continue;
                const Document& doc = c.at(gen.at(q.query_id));
                auto samples = build_samples(q, ranked.at(q.query_id), {doc.doc_id}, depth);
                for (SampleTag tag : tags) {
                    auto sample = docs_of(tag == SampleTag::Rel ? samples.rel : samples.corpus);
                    for (auto k : ks) {
                        auto report = faithfulness_score(doc, k, sample, nli, tag, s.workers);
                        scores[{tag, k}][q.query_id] = report.score;
                        json j = report;
                        j["method"] = method_name(m);
                        j["query_id"] = q.query_id;
                        reports << j.dump() << '\n';
                    }
                }
            }
            for (SampleTag tag : tags) {
                for (auto k : ks) {
                    const auto& gen_scores = scores[{tag, k}];
                    const auto& base = rd[{tag, k}];
                    std::vector<double> a, b;
                    double total = 0, base_total = 0;
                    for (const auto& [qid, v] : gen_scores) {
                        total += v;
                        if (base.contains(qid)) {
                            a.push_back(v);
                            b.push_back(base.at(qid));
                        }
                    }
                    for (const auto& [qid, v] : base) base_total += v;
                    double avg = gen_scores.empty() ? 0.0 : total / static_cast<double>(gen_scores.size());
                    double rd_avg = base.empty() ? 0.0 : base_total / static_cast<double>(base.size());
                    csv += s.dataset + "," + std::string(method_name(m)) + "," + s.model_tag + "," +
                           std::string(to_string(tag)) + "," + std::to_string(k) + "," + fmt(avg, 2) + "," +
                           fmt(rd_avg, 2) + "," + significance_mark(a, b, s, "*") + "," +
                           std::to_string(gen_scores.size()) + "\n";
                }
            }
        }
    }
    {
        auto f = out.open("reports/faithfulness-rd.jsonl");
        for (const auto& r : rd_rows) f << r.dump() << '\n';
    }
    out.write_text("reports/faithfulness.csv", csv);
    gateway->flush_transcript();
    write_manifest(out, s, "faithfulness",
                   {{"k_values", ks}, {"gateway_warnings", gateway->warnings()}, {"warnings", warnings}});
    return {kExitOk, std::nullopt, out.artifacts()};
}

// ---------------------------------------------------------------------------
// rag

RagOptions rag_options_of(const Settings& s) {
    RagOptions o;
    auto match = parse_answer_match(s.get<std::string>("answer_match", "normalized"));
    if (!match) throw Error(ErrorCode::Config, "answer_match must be normalized, raw or word");
    o.match = *match;
    o.workers = s.workers;
    o.max_tokens = s.get<int>("answer_max_tokens", 64);
    return o;
}

std::vector<double> correctness(const RagResult& r) {
    std::vector<double> v;
    for (const auto& run : r.runs) v.push_back(run.correct ? 1.0 : 0.0);
    return v;
}

void write_rag_runs(Outputs& out, const std::string& rel, const RagResult& r) {
    auto f = out.open(rel);
    for (const auto& run : r.runs) f << json(run).dump() << '\n';
}

std::vector<QueryRecord> answerable(const QuerySet& queries) {
    std::vector<QueryRecord> out;
    for (const auto& q : queries.records())
        if (!q.gold_answers.empty()) out.push_back(q);
    if (out.empty()) throw Error(ErrorCode::Config, "no query carries gold answers");
    return out;
}

CommandResult cmd_rag(const Settings& s) {
    std::vector<std::string> warnings;
    Corpus originals = load_originals(s, warnings);
    QuerySet queries = load_query_set(s, false, true);
    auto qs = answerable(queries);
    auto methods = methods_of(s);
    RagOptions base = rag_options_of(s);

    Outputs out(s.out_dir);
    auto gateway = make_gateway(s, "rag");
    auto plain = plain_index(originals);
    IndexProvider plain_provider = [&](const QueryRecord&) { return plain; };

    RagOptions no_rag = base;
    no_rag.with_retrieval = false;
    auto r_none = run_rag(qs, plain_provider, *gateway, no_rag);
    auto r_plain = run_rag(qs, plain_provider, *gateway, base);
    write_rag_runs(out, "runs/rag-noRAG.jsonl", r_none);
    write_rag_runs(out, "runs/rag-NoEnrich.jsonl", r_plain);
    auto c_none = correctness(r_none), c_plain = correctness(r_plain);

    std::size_t failures = r_none.aggregate.failures + r_plain.aggregate.failures;
    std::size_t attempted = 2 * qs.size();
    std::string csv = "dataset,setting,method,model,Acc,Acc_marks,Ans-5,Gen-5\n";
    auto pct = [](std::optional<double> v) { return v ? fmt(*v, 1) : std::string(); };
    csv += s.dataset + ",no-RAG,," + s.model_tag + "," + pct(r_none.aggregate.acc) + ",,,\n";
    csv += s.dataset + ",RAG,NoEnrich," + s.model_tag + "," + pct(r_plain.aggregate.acc) + "," +
           significance_mark(c_plain, c_none, s, "l") + "," + pct(r_plain.aggregate.ans5) + "," +
           pct(r_plain.aggregate.gen5) + "\n";
    for (Method m : methods) {
        Corpus c = enriched_corpus(s, originals, m);
        PerQueryIndexes per_query(c, plain, queries, s.workers);
        auto r = run_rag(qs, std::cref(per_query), *gateway, base);
        failures += r.aggregate.failures;
        attempted += qs.size();
        std::string name(method_name(m));
        write_rag_runs(out, "runs/rag-" + name + "-" + s.model_tag + ".jsonl", r);
        auto cr = correctness(r);
        csv += s.dataset + ",RAG," + name + "," + s.model_tag + "," + pct(r.aggregate.acc) + "," +
               significance_mark(cr, c_none, s, "l") + significance_mark(cr, c_plain, s, "r") + "," +
               pct(r.aggregate.ans5) + "," + pct(r.aggregate.gen5) + "\n";
    }
    out.write_text("reports/rag.csv", csv);
    gateway->flush_transcript();
    write_manifest(out, s, "rag",
                   {{"queries", qs.size()}, {"failures", failures}, {"gateway_warnings", gateway->warnings()},
                    {"warnings", warnings}});
    check_budget(failures, attempted, s.failure_budget, "answer generation");
    return {kExitOk, std::nullopt, out.artifacts()};
}

// ---------------------------------------------------------------------------
// attribution

CommandResult cmd_attribution(const Settings& s) {
    std::vector<std::string> warnings;
    Corpus originals = load_originals(s, warnings);
    QuerySet queries = load_query_set(s, false, true);
    auto qs = answerable(queries);
    auto methods = methods_of(s);
    if (methods.empty()) throw Error(ErrorCode::Config, "attribution needs at least one method");
    std::vector<AttributionRanker> rankers;
    for (const auto& r : s.get<std::vector<std::string>>("attribution_rankers", {"bm25", "bm25+nli"})) {
        auto parsed = parse_ranker(r);
        if (!parsed) throw Error(ErrorCode::Config, "unknown attribution ranker: " + r);
        rankers.push_back(*parsed);
    }

    Outputs out(s.out_dir);
    auto gateway = make_gateway(s, "attribution");
    NliCache nli_cache(gateway_nli(*gateway));
    NliFunction nli = nli_cache.as_function();
    auto plain = plain_index(originals);
    IndexProvider plain_provider = [&](const QueryRecord&) { return plain; };

    std::string csv = "dataset,setting,method,model,ranker,CA,Acc,Acc_sig,Acc-NoGen,Acc-NoGen_sig\n";
    std::size_t failures = 0, attempted = 0;
    for (Method m : methods) {
        Corpus c = enriched_corpus(s, originals, m);
        PerQueryIndexes per_query(c, plain, queries, s.workers);
        for (AttributionRanker ranker : rankers) {
            AttributionOptions opts;
            opts.ranker = ranker;
            opts.pool = s.get<std::size_t>("attribution_pool", 50);
            opts.rag = rag_options_of(s);
            auto result = run_attribution_matrix(qs, plain_provider, std::cref(per_query), c, *gateway, nli, opts);
            failures += result.rag_plain.aggregate.failures + result.rag_enriched.aggregate.failures;
            attempted += 2 * qs.size();
            std::string name(method_name(m)), rname(to_string(ranker));
            {
                auto f = out.open("runs/attribution-" + name + "-" + s.model_tag + "-" + rname + ".jsonl");
                for (const auto& cs : result.cases) f << json(cs).dump() << '\n';
            }
            // Significance against the first setting, paired by query.
            std::map<AttributionSetting, std::vector<double>> acc, nogen;
            for (const auto& cs : result.cases) {
                acc[cs.setting].push_back(cs.entailed ? 1.0 : 0.0);
                nogen[cs.setting].push_back(cs.acc_nogen.value_or(cs.entailed) ? 1.0 : 0.0);
            }
            const auto base = AttributionSetting::RagPlain_AttrPlain;
            for (AttributionSetting setting : kAllSettings) {
                const auto& a = result.aggregates.at(setting);
                bool first = setting == base;
                csv += s.dataset + "," + std::string(to_string(setting)) + "," + name + "," + s.model_tag + "," +
                       rname + "," + fmt(a.ca, 1) + "," + fmt(a.acc, 1) + "," +
                       (first ? "" : significance_mark(acc[setting], acc[base], s, "*")) + "," +
                       (a.acc_nogen ? fmt(*a.acc_nogen, 1) : "") + "," +
                       (first || !a.acc_nogen ? "" : significance_mark(nogen[setting], nogen[base], s, "*")) + "\n";
            }
        }
    }
    out.write_text("reports/attribution.csv", csv);
    gateway->flush_transcript();
    write_manifest(out, s, "attribution",
                   {{"queries", qs.size()}, {"failures", failures}, {"gateway_warnings", gateway->warnings()},
                    {"warnings", warnings}});
    check_budget(failures, attempted, s.failure_budget, "answer generation");
    return {kExitOk, std::nullopt, out.artifacts()};
}

// ---------------------------------------------------------------------------
// significance

CommandResult cmd_significance(const Settings& s) {
    QuerySet queries = load_query_set(s, true, false);
    json cfg = s.raw.value("significance", json::object());
    if (!cfg.contains("run_a") || !cfg.contains("run_b"))
        throw Error(ErrorCode::Config, "significance needs run_a and run_b");
    fs::path pa = cfg["run_a"].get<std::string>(), pb = cfg["run_b"].get<std::string>();
    for (const auto& p : {pa, pb})
        if (!fs::exists(p)) throw Error(ErrorCode::Config, "run path does not exist: " + p.string());
    auto a = read_trec_run(pa), b = read_trec_run(pb);
    auto permutations = cfg.value("permutations", s.get<std::size_t>("permutations", 100000));
    double alpha = cfg.value("alpha", 0.05);
    auto ea = evaluate(a, queries, {}, std::nullopt), eb = evaluate(b, queries, {}, std::nullopt);

    Outputs out(s.out_dir);
    std::string csv = "metric,mean_a,mean_b,statistic,p_value,n_permutations,significant\n";
    json rows = json::array();
    std::pair<const char*, double QueryEval::*> metrics[] = {
        {"NDCG@10", &QueryEval::ndcg10}, {"NDCG@100", &QueryEval::ndcg100}, {"MAP@100", &QueryEval::map100}};
    for (auto [name, field] : metrics) {
        auto va = column(ea, field), vb = column(eb, field);
        auto r = permutation_test(va, vb, permutations, s.seed, alpha);
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < va.size(); i++) {
            ma += va[i];
            mb += vb[i];
        }
        ma /= static_cast<double>(va.size());
        mb /= static_cast<double>(vb.size());
        csv += std::string(name) + "," + fmt(ma) + "," + fmt(mb) + "," + fmt(r.statistic, 6) + "," +
               fmt(r.p_value, 6) + "," + std::to_string(r.n_permutations) + "," + (r.significant ? "1" : "0") + "\n";
        rows.push_back({{"metric", name}, {"mean_a", ma}, {"mean_b", mb}, {"statistic", r.statistic},
                        {"p_value", r.p_value}, {"n_permutations", r.n_permutations},
                        {"significant", r.significant}});
    }
    out.write_text("reports/significance.csv", csv);
    out.write_text("reports/significance.json", json{{"rows", rows}}.dump(2) + "\n");
    write_manifest(out, s, "significance", {{"run_a", pa.string()}, {"run_b", pb.string()}});
    return {kExitOk, std::nullopt, out.artifacts()};
}

}  // namespace

CommandResult run_command(std::string_view name, const json& config) {
    auto failure = [](int code, std::string error, std::string detail) {
        return CommandResult{code, json{{"error", std::move(error)}, {"detail", std::move(detail)}}, {}};
    };
    try {
        Settings s = read_settings(config);
        if (name == "index") return cmd_index(s);
        if (name == "enrich") return cmd_enrich(s);
        if (name == "adhoc") return cmd_adhoc(s);
        if (name == "faithfulness") return cmd_faithfulness(s);
        if (name == "rag") return cmd_rag(s);
        if (name == "attribution") return cmd_attribution(s);
        if (name == "significance") return cmd_significance(s);
        return failure(kExitValidation, "Config", "unknown command: " + std::string(name));
    } catch (const Error& e) {
        return failure(e.is_backend() ? kExitBackend : kExitValidation, std::string(to_string(e.code())), e.detail());
    } catch (const json::exception& e) {
        return failure(kExitValidation, "Config", e.what());
    } catch (const std::exception& e) {
        return failure(kExitValidation, "Internal", e.what());
    }
}

}  // namespace enrichkit
