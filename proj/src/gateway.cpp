#include "enrichkit/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <httplib.h>

#include "enrichkit/error.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// HTTP

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (const char* env = std::getenv(kGatewayUrlEnv); env && *env) config_.base_url = env;
}

json HttpBackend::call(const std::string& endpoint, const json& request) {
    httplib::Client client(config_.base_url);
    auto secs = static_cast<time_t>(config_.timeout_seconds);
    auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    auto res = client.Post(endpoint, request.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        auto what = httplib::to_string(err);
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
            throw Error(ErrorCode::Timeout, endpoint + ": " + what);
        throw Error(ErrorCode::BackendError, endpoint + ": " + what);
    }
    if (res->status != 200) {
        std::string detail = res->body;
        try {
            auto body = json::parse(res->body);
            detail = body.value("error", std::string()) + ": " + body.value("detail", std::string());
        } catch (const json::exception&) {
        }
        throw Error(ErrorCode::ProtocolError, std::to_string(res->status) + " " + detail);
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProtocolError, "200 unparseable body: " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// Mock

std::optional<MockMode> parse_mock_mode(std::string_view name) {
    if (name == "Echo") return MockMode::Echo;
    if (name == "Template") return MockMode::Template;
    if (name == "ScriptedTable") return MockMode::ScriptedTable;
    if (name == "LexicalOverlapNLI") return MockMode::LexicalOverlapNLI;
    if (name == "HashEmbedding") return MockMode::HashEmbedding;
    return std::nullopt;
}

namespace {

MockSpec mock_spec_from_json(const json& j, MockMode fallback) {
    MockSpec spec;
    spec.mode = fallback;
    if (j.contains("mode")) {
        auto mode = parse_mock_mode(j["mode"].get<std::string>());
        if (!mode) throw Error(ErrorCode::Config, "unknown mock mode " + j["mode"].get<std::string>());
        spec.mode = *mode;
    }
    if (j.contains("table"))
        for (auto& [k, v] : j["table"].items()) spec.table.emplace(k, v);
    spec.echo_slot = j.value("echo_slot", spec.echo_slot);
    spec.template_text = j.value("template", j.value("template_text", spec.template_text));
    spec.embedding_dim = j.value("embedding_dim", spec.embedding_dim);
    return spec;
}

const json* table_lookup(const MockSpec& spec, const std::string& raw) {
    if (auto it = spec.table.find(raw); it != spec.table.end()) return &it->second;
    if (auto it = spec.table.find(sha256_hex(raw)); it != spec.table.end()) return &it->second;
    return nullptr;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

MockConfig mock_config_from_json(const json& j) {
    MockConfig cfg;
    if (j.contains("generate")) cfg.generate = mock_spec_from_json(j["generate"], MockMode::Echo);
    if (j.contains("embed")) cfg.embed = mock_spec_from_json(j["embed"], MockMode::HashEmbedding);
    if (j.contains("nli")) cfg.nli = mock_spec_from_json(j["nli"], MockMode::LexicalOverlapNLI);
    cfg.latency_ms = j.value("latency_ms", 0);
    return cfg;
}

std::string echo_final_slot(const std::string& prompt) {
    auto pos = prompt.rfind(": ");
    if (pos == std::string::npos) return trim(prompt);
    return trim(std::string_view(prompt).substr(pos + 2));
}

std::string echo_first_passage(const std::string& prompt) {
    static constexpr std::string_view kStart = "Passage 1: ";
    auto start = prompt.find(kStart);
    if (start == std::string::npos) return echo_final_slot(prompt);
    start += kStart.size();
    auto end = std::min(prompt.find(" Passage 2: ", start), prompt.find(" Question: ", start));
    return trim(std::string_view(prompt).substr(start, end == std::string::npos ? std::string::npos : end - start));
}

std::string prompt_body(const std::string& prompt) {
    for (std::string_view marker : {"induced by the following query: ", "Rewrite according to the query: ",
                                    "induced by the query: ", "Question: "}) {
        auto pos = prompt.find(marker);
        if (pos != std::string::npos) return trim(std::string_view(prompt).substr(pos + marker.size()));
    }
    return trim(prompt);
}

std::vector<double> hash_embedding(const std::string& text, std::size_t dim) {
    std::vector<double> v(dim, 0.0);
    if (dim == 0) return v;
    for (const auto& token : tokenize_and_stem(text)) v[fnv1a(token) % dim] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

double lexical_overlap_nli(const std::string& premise, const std::string& hypothesis) {
    auto p = tokenize_and_stem(premise);
    auto h = tokenize_and_stem(hypothesis);
    std::set<std::string> ps(p.begin(), p.end());
    std::set<std::string> hs(h.begin(), h.end());
    if (hs.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : hs) common += ps.contains(t) ? 1 : 0;
    return static_cast<double>(common) / static_cast<double>(hs.size());
}

std::string MockBackend::generate(const std::string& prompt) const {
    if (generate_fn_) return generate_fn_(prompt);
    const auto& spec = config_.generate;
    switch (spec.mode) {
        case MockMode::Echo:
            return spec.echo_slot == "passage1" ? echo_first_passage(prompt) : echo_final_slot(prompt);
        case MockMode::Template: {
            std::string out = spec.template_text;
            auto body = prompt_body(prompt);
            for (auto pos = out.find("{body}"); pos != std::string::npos; pos = out.find("{body}", pos + body.size()))
                out.replace(pos, 6, body);
            return out;
        }
        case MockMode::ScriptedTable: {
            const json* v = table_lookup(spec, prompt);
            if (!v) throw Error(ErrorCode::ScriptedTableMiss, "generate prompt " + sha256_hex(prompt));
            return v->get<std::string>();
        }
        default:
            throw Error(ErrorCode::Config, "mock mode not valid for generation");
    }
}

std::vector<double> MockBackend::embed_one(const std::string& text) const {
    const auto& spec = config_.embed;
    switch (spec.mode) {
        case MockMode::HashEmbedding:
            return hash_embedding(text, spec.embedding_dim);
        case MockMode::ScriptedTable: {
            const json* v = table_lookup(spec, text);
            if (!v) throw Error(ErrorCode::ScriptedTableMiss, "embed text " + sha256_hex(text));
            return v->get<std::vector<double>>();
        }
        default:
            throw Error(ErrorCode::Config, "mock mode not valid for embeddings");
    }
}

double MockBackend::nli(const std::string& premise, const std::string& hypothesis) const {
    if (nli_fn_) return nli_fn_(premise, hypothesis);
    const auto& spec = config_.nli;
    switch (spec.mode) {
        case MockMode::LexicalOverlapNLI:
            return lexical_overlap_nli(premise, hypothesis);
        case MockMode::ScriptedTable: {
            const json* v = table_lookup(spec, premise + "\n=>\n" + hypothesis);
            if (!v) throw Error(ErrorCode::ScriptedTableMiss, "nli pair");
            return v->get<double>();
        }
        default:
            throw Error(ErrorCode::Config, "mock mode not valid for NLI");
    }
}

json MockBackend::call(const std::string& endpoint, const json& request) {
    calls_++;
    std::size_t now = ++in_flight_;
    std::size_t prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }
    struct Leave {
        std::atomic<std::size_t>& counter;
        ~Leave() { counter--; }
    } leave{in_flight_};
    if (config_.latency_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(config_.latency_ms));

    if (endpoint == kGenerateEndpoint) return json{{"text", generate(request.at("prompt").get<std::string>())}};
    if (endpoint == kEmbedEndpoint) {
        json vectors = json::array();
        std::size_t dim = 0;
        for (const auto& t : request.at("texts")) {
            auto v = embed_one(t.get<std::string>());
            dim = v.size();
            vectors.push_back(std::move(v));
        }
        return json{{"vectors", std::move(vectors)}, {"dim", dim}};
    }
    if (endpoint == kNliEndpoint)
        return json{{"score", nli(request.at("premise").get<std::string>(), request.at("hypothesis").get<std::string>())}};
    throw Error(ErrorCode::ProtocolError, "404 unknown endpoint " + endpoint);
}

// ---------------------------------------------------------------------------
// Gateway

std::optional<TranscriptMode> parse_transcript_mode(std::string_view name) {
    if (name == "off") return TranscriptMode::Off;
    if (name == "record") return TranscriptMode::Record;
    if (name == "replay") return TranscriptMode::Replay;
    return std::nullopt;
}

std::string transcript_key(const std::string& endpoint, const json& request) {
    // nlohmann::json objects keep keys sorted, so dump() is canonical.
    return sha256_hex(endpoint + "\n" + request.dump());
}

ModelGateway::ModelGateway(std::shared_ptr<Backend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)), slots_(std::max(1, config_.max_concurrent)) {
    if (config_.max_concurrent < 1) throw Error(ErrorCode::Config, "max_concurrent must be >= 1");
    if (config_.retries < 0) throw Error(ErrorCode::Config, "retries must be >= 0");
    if (config_.transcript_mode != TranscriptMode::Off && !config_.record_replay_path)
        throw Error(ErrorCode::Config, "record/replay requires a transcript path");
    if (config_.transcript_mode == TranscriptMode::Replay) {
        std::ifstream in(*config_.record_replay_path, std::ios::binary);
        if (!in) throw Error(ErrorCode::Config, "cannot open transcript " + config_.record_replay_path->string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto entry = json::parse(line);
            transcript_.emplace(entry.at("key").get<std::string>(), std::move(entry));
        }
    } else if (!backend_) {
        throw Error(ErrorCode::Config, "no backend configured");
    }
}

ModelGateway::~ModelGateway() {
    try {
        flush_transcript();
    } catch (...) {
    }
}

void ModelGateway::flush_transcript() {
    std::lock_guard lock(mutex_);
    if (config_.transcript_mode != TranscriptMode::Record || !transcript_dirty_) return;
    std::filesystem::path path = *config_.record_replay_path;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write transcript " + path.string());
    for (const auto& [key, entry] : transcript_) out << entry.dump() << '\n';
    transcript_dirty_ = false;
}

std::vector<std::string> ModelGateway::warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
}

void ModelGateway::warn(std::string message) {
    std::cerr << "enrichkit: warning: " << message << '\n';
    std::lock_guard lock(mutex_);
    warnings_.push_back(std::move(message));
}

json ModelGateway::call_with_retries(const std::string& endpoint, const json& request) {
    for (int attempt = 0;; attempt++) {
        try {
            slots_.acquire();
            struct Release {
                std::counting_semaphore<4096>& s;
                ~Release() { s.release(); }
            } release{slots_};
            return backend_->call(endpoint, request);
        } catch (const Error& e) {
            bool transient = e.code() == ErrorCode::Timeout || e.code() == ErrorCode::BackendError ||
                             (e.code() == ErrorCode::ProtocolError && e.detail().starts_with("5"));
            if (!transient || attempt >= config_.retries) throw;
            retries_++;
        }
    }
}

json ModelGateway::exchange(const std::string& endpoint, const json& request, bool deterministic) {
    auto key = transcript_key(endpoint, request);
    if (config_.transcript_mode == TranscriptMode::Replay) {
        std::lock_guard lock(mutex_);
        auto it = transcript_.find(key);
        if (it == transcript_.end())
            throw Error(ErrorCode::ProtocolError, "replay: no transcript entry for " + endpoint + " request " + key);
        return it->second.at("response");
    }
    json response = call_with_retries(endpoint, request);
    if (config_.transcript_mode == TranscriptMode::Record) {
        std::lock_guard lock(mutex_);
        auto it = transcript_.find(key);
        if (it != transcript_.end()) {
            if (deterministic && it->second.at("response") != response)
                throw Error(ErrorCode::ProtocolError, "replay mismatch: backend answered " + endpoint +
                                                          " request " + key + " differently");
        } else {
            transcript_.emplace(key, json{{"key", key}, {"endpoint", endpoint}, {"request", request}, {"response", response}});
            transcript_dirty_ = true;
        }
    }
    return response;
}

std::string ModelGateway::generate(const std::string& prompt, double temperature, int max_tokens) {
    if (prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
    json request{{"prompt", prompt}, {"temperature", temperature}, {"max_tokens", max_tokens}};
    auto response = exchange(kGenerateEndpoint, request, temperature == 0.0);
    if (!response.contains("text") || !response["text"].is_string())
        throw Error(ErrorCode::ProtocolError, "generate response without text");
    return response["text"].get<std::string>();
}

std::vector<EmbeddingVector> ModelGateway::embed(const std::vector<std::string>& texts, const std::string& model_tag) {
    if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "empty embedding batch");
    json request{{"texts", texts}, {"model", model_tag}};
    auto response = exchange(kEmbedEndpoint, request, true);
    if (!response.contains("vectors") || !response["vectors"].is_array())
        throw Error(ErrorCode::ProtocolError, "embed response without vectors");
    const auto& vectors = response["vectors"];
    if (vectors.size() != texts.size())
        throw Error(ErrorCode::ProtocolError, "embed returned " + std::to_string(vectors.size()) + " vectors for " +
                                                  std::to_string(texts.size()) + " texts");
    std::vector<EmbeddingVector> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) {
        EmbeddingVector ev{v.get<std::vector<double>>(), model_tag};
        for (double x : ev.values)
            if (!std::isfinite(x)) throw Error(ErrorCode::ProtocolError, "non-finite embedding value");
        out.push_back(std::move(ev));
    }
    std::lock_guard lock(mutex_);
    auto [it, inserted] = embed_dims_.emplace(model_tag, out.front().values.size());
    for (const auto& ev : out)
        if (ev.values.size() != it->second)
            throw Error(ErrorCode::DimensionDrift, model_tag + ": expected dim " + std::to_string(it->second) +
                                                       ", got " + std::to_string(ev.values.size()));
    if (response.contains("dim") && response["dim"].get<std::size_t>() != it->second)
        throw Error(ErrorCode::DimensionDrift, model_tag + ": declared dim disagrees with vectors");
    return out;
}

double ModelGateway::nli_score(const std::string& premise, const std::string& hypothesis) {
    if (premise.empty() || hypothesis.empty()) throw Error(ErrorCode::InvalidArgument, "empty NLI premise or hypothesis");
    json request{{"premise", premise}, {"hypothesis", hypothesis}};
    auto response = exchange(kNliEndpoint, request, true);
    if (!response.contains("score") || !response["score"].is_number())
        throw Error(ErrorCode::ProtocolError, "nli response without score");
    double score = response["score"].get<double>();
    if (!std::isfinite(score)) throw Error(ErrorCode::ProtocolError, "non-finite NLI score");
    if (score < 0.0 || score > 1.0) {
        warn("NLI score " + std::to_string(score) + " clamped to [0,1]");
        score = std::clamp(score, 0.0, 1.0);
    }
    return score;
}

}  // namespace enrichkit
