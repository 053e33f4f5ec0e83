#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

namespace enrichkit {

inline constexpr const char* kGenerateEndpoint = "/v1/generate";
inline constexpr const char* kEmbedEndpoint = "/v1/embed";
inline constexpr const char* kNliEndpoint = "/v1/nli";
inline constexpr const char* kGatewayUrlEnv = "ENRICHKIT_GATEWAY_URL";

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_tag;

    bool operator==(const EmbeddingVector&) const = default;
};

/// Transport-level request/response exchange over the JSON wire protocol.
/// Implementations throw Error with Timeout, ProtocolError or BackendError.
class Backend {
public:
    virtual ~Backend() = default;
    virtual nlohmann::json call(const std::string& endpoint, const nlohmann::json& request) = 0;
};

struct HttpBackendConfig {
    std::string base_url = "http://127.0.0.1:8080";
    double timeout_seconds = 60.0;
};

/// Talks to a model server over HTTP. $ENRICHKIT_GATEWAY_URL overrides base_url.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    nlohmann::json call(const std::string& endpoint, const nlohmann::json& request) override;
    const std::string& base_url() const { return config_.base_url; }

private:
    HttpBackendConfig config_;
};

enum class MockMode { Echo, Template, ScriptedTable, LexicalOverlapNLI, HashEmbedding };

std::optional<MockMode> parse_mock_mode(std::string_view name);

/// Behaviour of one mock capability.
struct MockSpec {
    MockMode mode = MockMode::Echo;
    /// ScriptedTable lookups: keyed by raw input or by its sha256 hex. For NLI the
    /// raw key is premise + "\n=>\n" + hypothesis. Embedding values are JSON arrays.
    std::map<std::string, nlohmann::json> table;
    /// Echo: "final" returns the text after the last ": "; "passage1" returns the
    /// first passage of a question-answering prompt.
    std::string echo_slot = "final";
    /// Template: "{body}" expands to the prompt text after its instruction header.
    std::string template_text = "{body}";
    std::size_t embedding_dim = 256;

    static MockSpec of(MockMode mode) {
        MockSpec s;
        s.mode = mode;
        return s;
    }
};

struct MockConfig {
    MockSpec generate = MockSpec::of(MockMode::Echo);
    MockSpec embed = MockSpec::of(MockMode::HashEmbedding);
    MockSpec nli = MockSpec::of(MockMode::LexicalOverlapNLI);
    /// Simulated latency per call, for concurrency tests.
    int latency_ms = 0;
};

MockConfig mock_config_from_json(const nlohmann::json& j);

/// Deterministic offline backend implementing the same wire protocol.
class MockBackend : public Backend {
public:
    using NliFunction = std::function<double(const std::string& premise, const std::string& hypothesis)>;
    using GenerateFunction = std::function<std::string(const std::string& prompt)>;

    explicit MockBackend(MockConfig config = {}) : config_(std::move(config)) {}

    /// Test hooks overriding the configured NLI / generation behaviour.
    void set_nli_function(NliFunction fn) { nli_fn_ = std::move(fn); }
    void set_generate_function(GenerateFunction fn) { generate_fn_ = std::move(fn); }

    nlohmann::json call(const std::string& endpoint, const nlohmann::json& request) override;

    std::size_t calls() const { return calls_.load(); }
    std::size_t max_in_flight() const { return max_in_flight_.load(); }

private:
    std::string generate(const std::string& prompt) const;
    std::vector<double> embed_one(const std::string& text) const;
    double nli(const std::string& premise, const std::string& hypothesis) const;

    MockConfig config_;
    NliFunction nli_fn_;
    GenerateFunction generate_fn_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
};

/// Mock text helpers, exposed for tests.
std::string echo_final_slot(const std::string& prompt);
std::string echo_first_passage(const std::string& prompt);
std::string prompt_body(const std::string& prompt);
std::vector<double> hash_embedding(const std::string& text, std::size_t dim);
double lexical_overlap_nli(const std::string& premise, const std::string& hypothesis);

enum class TranscriptMode { Off, Record, Replay };

std::optional<TranscriptMode> parse_transcript_mode(std::string_view name);

struct GatewayConfig {
    std::string base_url = "http://127.0.0.1:8080";
    double timeout_seconds = 60.0;
    int max_concurrent = 4;
    int retries = 2;
    std::optional<std::filesystem::path> record_replay_path;
    TranscriptMode transcript_mode = TranscriptMode::Off;
};

/// Typed front end over a Backend: bounded in-flight requests, retries,
/// response validation and content-hash keyed record/replay.
class ModelGateway {
public:
    /// `backend` may be null only in Replay mode.
    ModelGateway(std::shared_ptr<Backend> backend, GatewayConfig config);
    ~ModelGateway();

    ModelGateway(const ModelGateway&) = delete;
    ModelGateway& operator=(const ModelGateway&) = delete;

    std::string generate(const std::string& prompt, double temperature = 0.0, int max_tokens = 512);
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, const std::string& model_tag);
    /// Score in [0,1]; out-of-range backend values are clamped and counted as warnings.
    double nli_score(const std::string& premise, const std::string& hypothesis);

    /// Writes the recorded transcript (sorted by key). Called by the destructor too.
    void flush_transcript();

    const GatewayConfig& config() const { return config_; }
    std::size_t retry_count() const { return retries_.load(); }
    std::vector<std::string> warnings() const;

private:
    nlohmann::json exchange(const std::string& endpoint, const nlohmann::json& request, bool deterministic);
    nlohmann::json call_with_retries(const std::string& endpoint, const nlohmann::json& request);
    void warn(std::string message);

    std::shared_ptr<Backend> backend_;
    GatewayConfig config_;
    std::counting_semaphore<4096> slots_;
    std::atomic<std::size_t> retries_{0};

    mutable std::mutex mutex_;
    std::map<std::string, nlohmann::json> transcript_;  // key -> {endpoint, request, response}
    bool transcript_dirty_ = false;
    std::map<std::string, std::size_t> embed_dims_;
    std::vector<std::string> warnings_;
};

/// Key used by record/replay transcripts.
std::string transcript_key(const std::string& endpoint, const nlohmann::json& request);

}  // namespace enrichkit
