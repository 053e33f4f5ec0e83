#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace enrichkit {

enum class Origin { Original, Generated };

/// Generation methods: zero-shot, document modification, two-doc summary,
/// relevant+random two-doc summary, three-doc summary.
enum class Method { ZS, DM, TwoDS, TwoDSR, ThreeDS };

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);
/// Number of source documents a method consumes: 0/1/2/2/3.
std::size_t method_arity(Method method);

struct Provenance {
    Origin origin = Origin::Original;
    std::optional<Method> method;
    std::optional<std::string> model_tag;
    std::optional<std::string> query_id;
    std::vector<std::string> source_doc_ids;

    static Provenance generated(Method method, std::string model_tag, std::string query_id,
                                std::vector<std::string> source_doc_ids);

    /// Throws InvalidArgument when the origin/method/arity invariants are broken.
    void validate() const;

    bool operator==(const Provenance&) const = default;
};

struct Document {
    std::string doc_id;
    std::string text;
    std::optional<std::string> title;
    Provenance provenance;

    bool is_generated() const { return provenance.origin == Origin::Generated; }
    /// Text as seen by the indexer: "title. text" when a title exists.
    std::string index_text() const;

    bool operator==(const Document&) const = default;
};

void to_json(nlohmann::json& j, const Document& doc);
void from_json(const nlohmann::json& j, Document& doc);

inline constexpr int kRelevantGrade = 2;

/// doc_id -> grade in {0,1,2,3}.
using Qrels = std::map<std::string, int>;

struct QueryRecord {
    std::string query_id;
    std::string text;
    Qrels qrels;
    std::vector<std::string> gold_answers;

    int grade(const std::string& doc_id) const;
    bool is_relevant(const std::string& doc_id) const { return grade(doc_id) >= kRelevantGrade; }
    /// Relevant doc ids in ascending id order.
    std::vector<std::string> relevant_ids() const;
};

class QuerySet {
public:
    void add(QueryRecord record);
    bool contains(const std::string& query_id) const { return index_.contains(query_id); }
    const QueryRecord& at(const std::string& query_id) const;
    QueryRecord& at(const std::string& query_id);
    const std::vector<QueryRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    /// Queries as JSONL ({query_id, text}) or TSV (query_id<TAB>text).
    static QuerySet load_queries(const std::filesystem::path& path);
    /// TREC qrels "query_id 0 doc_id grade"; unknown query ids are ignored.
    void attach_qrels(const std::filesystem::path& path);
    /// Answers JSONL with query_id, text, answers; creates missing queries.
    void attach_answers(const std::filesystem::path& path);

private:
    std::vector<QueryRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

void write_qrels(const std::filesystem::path& path, const QuerySet& queries);

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::string corpus_id) : id_(std::move(corpus_id)) {}

    /// Validates provenance and rejects duplicate ids and empty text.
    void add(Document doc);

    const std::string& id() const { return id_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const std::vector<Document>& docs() const { return docs_; }
    const Document* find(const std::string& doc_id) const;
    const Document& at(const std::string& doc_id) const;

    void save_jsonl(const std::filesystem::path& path) const;

    bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

private:
    std::string id_ = "corpus";
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { JSONL, TSV };

struct IngestResult {
    Corpus corpus;
    std::vector<std::string> warnings;
};

/// JSONL records carry doc_id, text, optional title and provenance. TSV rows are
/// doc_id<TAB>text or doc_id<TAB>title<TAB>text.
IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Append-only on-disk document file plus an id -> byte offset map.
class DocumentStore {
public:
    static DocumentStore create(const std::filesystem::path& dir);
    static DocumentStore open(const std::filesystem::path& dir);

    void append(const Document& doc);
    /// Persists the offset map; call once ingestion is finished.
    void commit() const;

    Document get(const std::string& doc_id) const;
    std::size_t size() const { return offsets_.size(); }
    Corpus load_all(std::string corpus_id = "corpus") const;

private:
    explicit DocumentStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::filesystem::path data_path() const { return dir_ / "docs.jsonl"; }
    std::filesystem::path index_path() const { return dir_ / "docs.offsets"; }

    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::uint64_t>> order_;
    std::unordered_map<std::string, std::uint64_t> offsets_;
};

/// Splits text into consecutive, disjoint passages of `chunk_size` words. Ids are
/// "<base_id>-<n>" counting from 0.
std::vector<Document> chunk_document(std::string_view text, std::size_t chunk_size = 100,
                                     const std::string& base_id = "chunk");

/// A per-query view of a corpus: every original document plus the generated
/// documents written for the active query. Holds a pointer to the corpus, which
/// must outlive the view.
struct CorpusView {
    const Corpus* corpus = nullptr;
    std::string base_corpus_id;
    std::string active_query_id;
    std::set<std::string> included_generated_docs;

    bool contains(const Document& doc) const {
        return !doc.is_generated() || included_generated_docs.contains(doc.doc_id);
    }
    std::vector<const Document*> documents() const;
};

/// Originals only.
CorpusView plain_view(const Corpus& corpus);

/// Originals plus the generated doc(s) for `query_id` under (method, model_tag).
CorpusView enriched_view(const Corpus& corpus, const QuerySet& queries, const std::string& query_id, Method method,
                         const std::string& model_tag);

/// Originals plus every generated doc for `query_id` regardless of method.
CorpusView query_view(const Corpus& corpus, const std::string& query_id);

}  // namespace enrichkit
