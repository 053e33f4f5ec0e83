#include "enrichkit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "enrichkit/error.hpp"
#include "enrichkit/text.hpp"

namespace enrichkit {

using nlohmann::json;

std::string_view method_name(Method method) {
    switch (method) {
        case Method::ZS: return "ZS";
        case Method::DM: return "DM";
        case Method::TwoDS: return "2DS";
        case Method::TwoDSR: return "2DSR";
        case Method::ThreeDS: return "3DS";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : {Method::ZS, Method::DM, Method::TwoDS, Method::TwoDSR, Method::ThreeDS})
        if (method_name(m) == name) return m;
    return std::nullopt;
}

std::size_t method_arity(Method method) {
    switch (method) {
        case Method::ZS: return 0;
        case Method::DM: return 1;
        case Method::TwoDS:
        case Method::TwoDSR: return 2;
        case Method::ThreeDS: return 3;
    }
    return 0;
}

Provenance Provenance::generated(Method method, std::string model_tag, std::string query_id,
                                 std::vector<std::string> source_doc_ids) {
    Provenance p;
    p.origin = Origin::Generated;
    p.method = method;
    p.model_tag = std::move(model_tag);
    p.query_id = std::move(query_id);
    p.source_doc_ids = std::move(source_doc_ids);
    return p;
}

void Provenance::validate() const {
    if (origin == Origin::Original) {
        if (method || query_id || !source_doc_ids.empty())
            throw Error(ErrorCode::InvalidArgument, "original document carries generation provenance");
        return;
    }
    if (!method) throw Error(ErrorCode::InvalidArgument, "generated document without method");
    if (!query_id || query_id->empty()) throw Error(ErrorCode::InvalidArgument, "generated document without query_id");
    if (source_doc_ids.size() != method_arity(*method))
        throw Error(ErrorCode::ArityMismatch, std::string(method_name(*method)) + " expects " +
                                                  std::to_string(method_arity(*method)) + " source docs, got " +
                                                  std::to_string(source_doc_ids.size()));
}

std::string Document::index_text() const {
    if (title && !title->empty()) return *title + ". " + text;
    return text;
}

void to_json(json& j, const Document& doc) {
    j = json{{"doc_id", doc.doc_id}, {"text", doc.text}};
    if (doc.title) j["title"] = *doc.title;
    const auto& p = doc.provenance;
    if (p.origin == Origin::Generated) {
        json pj{{"origin", "generated"}};
        if (p.method) pj["method"] = method_name(*p.method);
        if (p.model_tag) pj["model_tag"] = *p.model_tag;
        if (p.query_id) pj["query_id"] = *p.query_id;
        pj["source_doc_ids"] = p.source_doc_ids;
        j["provenance"] = std::move(pj);
    }
}

void from_json(const json& j, Document& doc) {
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    doc.title.reset();
    if (auto it = j.find("title"); it != j.end() && !it->is_null()) doc.title = it->get<std::string>();
    doc.provenance = Provenance{};
    if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
        const json& pj = *it;
        auto origin = pj.value("origin", std::string("original"));
        if (origin == "generated") {
            doc.provenance.origin = Origin::Generated;
        } else if (origin != "original") {
            throw Error(ErrorCode::MalformedRecord, "unknown origin '" + origin + "'");
        }
        if (auto m = pj.find("method"); m != pj.end() && !m->is_null()) {
            auto parsed = parse_method(m->get<std::string>());
            if (!parsed) throw Error(ErrorCode::UnknownMethodTag, m->get<std::string>());
            doc.provenance.method = parsed;
        }
        if (auto m = pj.find("model_tag"); m != pj.end() && !m->is_null())
            doc.provenance.model_tag = m->get<std::string>();
        if (auto m = pj.find("query_id"); m != pj.end() && !m->is_null())
            doc.provenance.query_id = m->get<std::string>();
        if (auto m = pj.find("source_doc_ids"); m != pj.end() && !m->is_null())
            doc.provenance.source_doc_ids = m->get<std::vector<std::string>>();
    }
}

int QueryRecord::grade(const std::string& doc_id) const {
    auto it = qrels.find(doc_id);
    return it == qrels.end() ? 0 : it->second;
}

std::vector<std::string> QueryRecord::relevant_ids() const {
    std::vector<std::string> ids;
    for (const auto& [doc_id, g] : qrels)
        if (g >= kRelevantGrade) ids.push_back(doc_id);
    return ids;
}

void QuerySet::add(QueryRecord record) {
    if (index_.contains(record.query_id)) throw Error(ErrorCode::DuplicateId, record.query_id);
    index_.emplace(record.query_id, records_.size());
    records_.push_back(std::move(record));
}

const QueryRecord& QuerySet::at(const std::string& query_id) const {
    auto it = index_.find(query_id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownQuery, query_id);
    return records_[it->second];
}

QueryRecord& QuerySet::at(const std::string& query_id) {
    auto it = index_.find(query_id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownQuery, query_id);
    return records_[it->second];
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

json parse_line(const std::string& line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

}  // namespace

QuerySet QuerySet::load_queries(const std::filesystem::path& path) {
    auto in = open_input(path);
    QuerySet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (blank(line)) continue;
        QueryRecord rec;
        if (line.front() == '{') {
            auto j = parse_line(line, line_no);
            if (!j.contains("query_id") || !j.contains("text"))
                throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no));
            rec.query_id = j["query_id"].get<std::string>();
            rec.text = j["text"].get<std::string>();
            if (j.contains("answers")) rec.gold_answers = j["answers"].get<std::vector<std::string>>();
        } else {
            auto cols = split_tabs(line);
            if (cols.size() < 2) throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no));
            rec.query_id = cols[0];
            rec.text = cols[1];
        }
        set.add(std::move(rec));
    }
    return set;
}

void QuerySet::attach_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (blank(line)) continue;
        std::istringstream ss(line);
        std::string qid, iter, doc_id;
        int grade = 0;
        if (!(ss >> qid >> iter >> doc_id >> grade))
            throw Error(ErrorCode::MalformedRecord, path.string() + " line " + std::to_string(line_no));
        if (grade < 0 || grade > 3)
            throw Error(ErrorCode::MalformedRecord,
                        "grade " + std::to_string(grade) + " outside 0..3 at line " + std::to_string(line_no));
        if (auto it = index_.find(qid); it != index_.end()) records_[it->second].qrels[doc_id] = grade;
    }
}

void QuerySet::attach_answers(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (blank(line)) continue;
        auto j = parse_line(line, line_no);
        if (!j.contains("query_id") || !j.contains("answers"))
            throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no));
        auto qid = j["query_id"].get<std::string>();
        if (!contains(qid)) add(QueryRecord{qid, j.value("text", std::string()), {}, {}});
        at(qid).gold_answers = j["answers"].get<std::vector<std::string>>();
        if (at(qid).text.empty() && j.contains("text")) at(qid).text = j["text"].get<std::string>();
    }
}

void write_qrels(const std::filesystem::path& path, const QuerySet& queries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& q : queries.records())
        for (const auto& [doc_id, grade] : q.qrels) out << q.query_id << " 0 " << doc_id << ' ' << grade << '\n';
}

void Corpus::add(Document doc) {
    if (doc.doc_id.empty()) throw Error(ErrorCode::InvalidArgument, "empty doc_id");
    if (normalize_whitespace(doc.text).empty()) throw Error(ErrorCode::InvalidArgument, "empty text for " + doc.doc_id);
    if (index_.contains(doc.doc_id)) throw Error(ErrorCode::DuplicateId, doc.doc_id);
    doc.provenance.validate();
    index_.emplace(doc.doc_id, docs_.size());
    docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(const std::string& doc_id) const {
    const Document* doc = find(doc_id);
    if (!doc) throw Error(ErrorCode::UnknownDocument, doc_id);
    return *doc;
}

void Corpus::save_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& doc : docs_) out << json(doc).dump() << '\n';
}

IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format) {
    auto in = open_input(path);
    IngestResult result{Corpus(path.stem().string()), {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (blank(line)) continue;
        Document doc;
        if (format == CorpusFormat::JSONL) {
            auto j = parse_line(line, line_no);
            if (!j.is_object() || !j.contains("doc_id") || !j.contains("text"))
                throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no));
            try {
                doc = j.get<Document>();
            } catch (const json::exception& e) {
                throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
            }
        } else {
            auto cols = split_tabs(line);
            if (cols.size() == 2) {
                doc.doc_id = cols[0];
                doc.text = cols[1];
            } else if (cols.size() == 3) {
                doc.doc_id = cols[0];
                doc.title = cols[1];
                doc.text = cols[2];
            } else {
                throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no));
            }
        }
        if (result.corpus.find(doc.doc_id)) throw Error(ErrorCode::DuplicateId, doc.doc_id);
        try {
            result.corpus.add(std::move(doc));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DuplicateId) throw;
            throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
    if (result.corpus.empty()) result.warnings.push_back("no documents in " + path.string());
    return result;
}

DocumentStore DocumentStore::create(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    DocumentStore store(dir);
    std::ofstream truncate(store.data_path(), std::ios::binary | std::ios::trunc);
    if (!truncate) throw Error(ErrorCode::Io, "cannot create " + store.data_path().string());
    return store;
}

DocumentStore DocumentStore::open(const std::filesystem::path& dir) {
    DocumentStore store(dir);
    auto in = open_input(store.index_path());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.rfind('\t');
        if (tab == std::string::npos) throw Error(ErrorCode::MalformedRecord, store.index_path().string());
        auto id = line.substr(0, tab);
        auto offset = std::stoull(line.substr(tab + 1));
        store.order_.emplace_back(id, offset);
        store.offsets_.emplace(std::move(id), offset);
    }
    return store;
}

void DocumentStore::append(const Document& doc) {
    if (offsets_.contains(doc.doc_id)) throw Error(ErrorCode::DuplicateId, doc.doc_id);
    std::ofstream out(data_path(), std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to " + data_path().string());
    out.seekp(0, std::ios::end);
    auto offset = static_cast<std::uint64_t>(out.tellp());
    out << json(doc).dump() << '\n';
    order_.emplace_back(doc.doc_id, offset);
    offsets_.emplace(doc.doc_id, offset);
}

void DocumentStore::commit() const {
    std::ofstream out(index_path(), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + index_path().string());
    for (const auto& [id, offset] : order_) out << id << '\t' << offset << '\n';
}

Document DocumentStore::get(const std::string& doc_id) const {
    auto it = offsets_.find(doc_id);
    if (it == offsets_.end()) throw Error(ErrorCode::UnknownDocument, doc_id);
    auto in = open_input(data_path());
    in.seekg(static_cast<std::streamoff>(it->second));
    std::string line;
    std::getline(in, line);
    return json::parse(line).get<Document>();
}

Corpus DocumentStore::load_all(std::string corpus_id) const {
    Corpus corpus(std::move(corpus_id));
    auto in = open_input(data_path());
    std::string line;
    for (const auto& [id, offset] : order_) {
        in.seekg(static_cast<std::streamoff>(offset));
        std::getline(in, line);
        corpus.add(json::parse(line).get<Document>());
    }
    return corpus;
}

std::vector<Document> chunk_document(std::string_view text, std::size_t chunk_size, const std::string& base_id) {
    if (chunk_size == 0) throw Error(ErrorCode::InvalidArgument, "chunk_size must be >= 1");
    auto words = split_words(text);
    std::vector<Document> chunks;
    for (std::size_t start = 0, n = 0; start < words.size(); start += chunk_size, n++) {
        Document doc;
        doc.doc_id = base_id + "-" + std::to_string(n);
        doc.text = join_words(words, start, std::min(words.size(), start + chunk_size));
        chunks.push_back(std::move(doc));
    }
    return chunks;
}

std::vector<const Document*> CorpusView::documents() const {
    std::vector<const Document*> out;
    if (!corpus) return out;
    for (const auto& doc : corpus->docs())
        if (contains(doc)) out.push_back(&doc);
    return out;
}

CorpusView plain_view(const Corpus& corpus) {
    return CorpusView{&corpus, corpus.id(), "", {}};
}

CorpusView enriched_view(const Corpus& corpus, const QuerySet& queries, const std::string& query_id, Method method,
                         const std::string& model_tag) {
    if (!queries.contains(query_id)) throw Error(ErrorCode::UnknownQuery, query_id);
    CorpusView view{&corpus, corpus.id(), query_id, {}};
    bool tag_seen = false;
    for (const auto& doc : corpus.docs()) {
        if (!doc.is_generated()) continue;
        const auto& p = doc.provenance;
        if (p.method != method || p.model_tag != model_tag) continue;
        tag_seen = true;
        if (p.query_id == query_id) view.included_generated_docs.insert(doc.doc_id);
    }
    if (!tag_seen)
        throw Error(ErrorCode::UnknownMethodTag, std::string(method_name(method)) + "/" + model_tag);
    return view;
}

CorpusView query_view(const Corpus& corpus, const std::string& query_id) {
    CorpusView view{&corpus, corpus.id(), query_id, {}};
    for (const auto& doc : corpus.docs())
        if (doc.is_generated() && doc.provenance.query_id == query_id) view.included_generated_docs.insert(doc.doc_id);
    return view;
}

}  // namespace enrichkit
