#include "corpusmap/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "corpusmap/error.hpp"
#include "corpusmap/text.hpp"

namespace corpusmap::index {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "corpusmap-snapshot";

// ---------------------------------------------------------------------------
// Binary float32 encoding

void append_f32(std::string& out, float v)
{
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float read_f32(const std::string& in, std::size_t offset)
{
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return std::bit_cast<float>(bits);
}

std::string encode_vectors(const VectorIndex& vx)
{
    std::string out;
    out.reserve(vx.data().size() * 4);
    for (float v : vx.data()) append_f32(out, v);
    return out;
}

std::string encode_points(const std::vector<Point2>& pts)
{
    std::string out;
    out.reserve(pts.size() * 8);
    for (const auto& p : pts) {
        append_f32(out, static_cast<float>(p.x));
        append_f32(out, static_cast<float>(p.y));
    }
    return out;
}

std::vector<Point2> decode_points(const std::string& bytes, std::size_t count, const char* what)
{
    if (bytes.size() != count * 8) fail(ErrorCode::corrupt_snapshot, std::string("snapshot: wrong size for ") + what);
    std::vector<Point2> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = {read_f32(bytes, i * 8), read_f32(bytes, i * 8 + 4)};
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON records

json topic_to_json(const Topic& t)
{
    json kw = json::array();
    for (const auto& k : t.keywords) kw.push_back(json::array({k.term, k.weight}));
    return json{{"topic_id", t.topic_id},
                {"centroid", t.centroid},
                {"keywords", kw},
                {"label", t.label},
                {"description", t.description},
                {"size", t.size},
                {"parent_id", t.parent_id ? json(*t.parent_id) : json(nullptr)},
                {"level", t.level},
                {"source_intervals", t.source_intervals},
                {"degraded_label", t.degraded_label}};
}

Topic topic_from_json(const json& j)
{
    Topic t;
    t.topic_id = j.at("topic_id").get<std::string>();
    t.centroid = j.at("centroid").get<Vector>();
    for (const auto& k : j.at("keywords")) t.keywords.push_back({k.at(0).get<std::string>(), k.at(1).get<double>()});
    t.label = j.at("label").get<std::string>();
    t.description = j.at("description").get<std::string>();
    t.size = j.at("size").get<std::size_t>();
    if (!j.at("parent_id").is_null()) t.parent_id = j.at("parent_id").get<std::string>();
    t.level = j.at("level").get<int>();
    t.source_intervals = j.at("source_intervals").get<std::vector<std::int32_t>>();
    t.degraded_label = j.at("degraded_label").get<bool>();
    return t;
}

json stats_to_json(const ingest::CorpusStats& s)
{
    return json{{"doc_count", s.doc_count},           {"sentence_count", s.sentence_count},
                {"min_date", s.min_date.iso()},       {"max_date", s.max_date.iso()},
                {"interval_count", s.interval_count}, {"skipped", s.skipped},
                {"duplicates", s.duplicates}};
}

Date date_from_json(const json& j)
{
    auto d = Date::parse(j.get<std::string>());
    if (!d) fail(ErrorCode::corrupt_snapshot, "snapshot: invalid date");
    return *d;
}

ingest::CorpusStats stats_from_json(const json& j)
{
    ingest::CorpusStats s;
    s.doc_count = j.at("doc_count").get<std::size_t>();
    s.sentence_count = j.at("sentence_count").get<std::size_t>();
    s.min_date = date_from_json(j.at("min_date"));
    s.max_date = date_from_json(j.at("max_date"));
    s.interval_count = j.at("interval_count").get<std::size_t>();
    s.skipped = j.at("skipped").get<std::size_t>();
    s.duplicates = j.at("duplicates").get<std::size_t>();
    return s;
}

json field_to_json(const FieldIndex& f)
{
    json postings = json::object();
    for (const auto& [term, plist] : f.postings) {
        json arr = json::array();
        for (const auto& p : plist) arr.push_back(json::array({p.doc, p.tf}));
        postings[term] = std::move(arr);
    }
    return json{{"postings", std::move(postings)}, {"doc_lengths", f.doc_lengths}};
}

FieldIndex field_from_json(const json& j)
{
    FieldIndex f;
    for (const auto& [term, arr] : j.at("postings").items()) {
        auto& plist = f.postings[term];
        for (const auto& p : arr) plist.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
    }
    f.doc_lengths = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
    return f;
}

json interval_to_json(const topics::IntervalModel& m, const std::vector<Document>& docs)
{
    auto ids = [&](const std::vector<std::size_t>& positions) {
        std::vector<std::string> out;
        out.reserve(positions.size());
        for (std::size_t p : positions) out.push_back(docs[p].doc_id);
        return out;
    };
    json topics = json::array();
    for (std::size_t k = 0; k < m.topics.size(); ++k) {
        json t = topic_to_json(m.topics[k]);
        t["members"] = ids(m.members[k]);
        topics.push_back(std::move(t));
    }
    return json{{"id", m.interval.id},
                {"start", m.interval.start.iso()},
                {"end", m.interval.end.iso()},
                {"topics", std::move(topics)},
                {"outliers", ids(m.outliers)},
                {"reducer", {{"mean", m.reducer.mean}, {"basis", m.reducer.basis}, {"padded_dims", m.reducer.padded_dims}}},
                {"degenerate", m.degenerate}};
}

topics::IntervalModel interval_from_json(const json& j, const std::unordered_map<std::string, std::size_t>& position)
{
    auto positions = [&](const json& arr) {
        std::vector<std::size_t> out;
        for (const auto& id : arr) {
            auto it = position.find(id.get<std::string>());
            if (it == position.end()) fail(ErrorCode::corrupt_snapshot, "snapshot: interval member is not a document");
            out.push_back(it->second);
        }
        return out;
    };
    topics::IntervalModel m;
    m.interval = {j.at("id").get<std::int32_t>(), date_from_json(j.at("start")), date_from_json(j.at("end"))};
    for (const auto& t : j.at("topics")) {
        m.topics.push_back(topic_from_json(t));
        m.members.push_back(positions(t.at("members")));
    }
    m.outliers = positions(j.at("outliers"));
    const auto& r = j.at("reducer");
    m.reducer.mean = r.at("mean").get<Vector>();
    m.reducer.basis = r.at("basis").get<std::vector<Vector>>();
    m.reducer.padded_dims = r.at("padded_dims").get<int>();
    m.degenerate = j.at("degenerate").get<bool>();
    return m;
}

std::string jsonl(const std::vector<json>& rows)
{
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::vector<json> parse_jsonl(const std::string& bytes)
{
    std::vector<json> rows;
    std::istringstream in(bytes);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) rows.push_back(json::parse(line));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Files

void write_file(const fs::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write snapshot file", path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::io, "short write on snapshot file", path.string());
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::corrupt_snapshot, "snapshot file missing: " + path.filename().string(), path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The config echo in the manifest takes part in the snapshot id.
constexpr const char* kConfigKey = "manifest.config";

std::string config_checksum(const json& config) { return text::hex64(text::fnv1a64(config.dump())); }

std::string snapshot_id_of(const std::map<std::string, std::string>& checksums)
{
    std::string acc;
    for (const auto& [name, sum] : checksums) acc += name + ":" + sum + ";";
    return text::hex64(text::fnv1a64(acc));
}

}  // namespace

std::string save_snapshot(const Snapshot& snap, const fs::path& dir)
{
    std::map<std::string, std::string> files;

    {
        std::vector<json> rows;
        rows.reserve(snap.docs.size());
        for (const auto& d : snap.docs) {
            rows.push_back(json{{"doc_id", d.doc_id},
                                {"title", d.title},
                                {"abstract", d.body},
                                {"pub_date", d.pub_date.iso()},
                                {"journal", d.journal},
                                {"authors", d.authors},
                                {"topic_id", d.topic_id ? json(*d.topic_id) : json(nullptr)}});
        }
        files["documents.jsonl"] = jsonl(rows);
    }
    {
        std::vector<json> rows;
        rows.reserve(snap.sentences.size());
        for (const auto& s : snap.sentences) rows.push_back(json{{"doc_id", s.doc_id}, {"seq", s.seq}, {"text", s.text}});
        files["sentences.jsonl"] = jsonl(rows);
    }
    files["doc_vectors.f32"] = encode_vectors(snap.doc_vectors);
    files["sentence_vectors.f32"] = encode_vectors(snap.sentence_vectors);
    files["lexical.json"] = json{{"body", field_to_json(snap.lexical.field(Field::body))},
                                 {"title", field_to_json(snap.lexical.field(Field::title))}}
                                .dump();
    {
        json topics = json::array();
        std::vector<Point2> coords;
        for (const auto& t : snap.atlas.topics) {
            topics.push_back(topic_to_json(t));
            coords.push_back(t.coords);
        }
        files["topics.json"] = topics.dump();
        files["topic_coords.f32"] = encode_points(coords);
    }
    {
        std::string tsv;
        for (std::size_t i = 0; i < snap.docs.size(); ++i) {
            tsv += snap.docs[i].doc_id + '\t' + snap.atlas.doc_assignments.at(i) + '\n';
        }
        files["assignments.tsv"] = tsv;
    }
    files["doc_coords.f32"] = encode_points(snap.atlas.doc_coords);
    {
        std::vector<json> rows;
        for (const auto& m : snap.atlas.merge_log) {
            rows.push_back(json{{"interval_topic_id", m.interval_topic_id},
                                {"merged_topic_id", m.merged_topic_id},
                                {"similarity", m.similarity},
                                {"absorbed", m.absorbed}});
        }
        files["merge_log.jsonl"] = jsonl(rows);
    }
    {
        json arr = json::array();
        for (const auto& m : snap.intervals) arr.push_back(interval_to_json(m, snap.docs));
        files["intervals.json"] = arr.dump();
    }

    std::map<std::string, std::string> checksums;
    json listing = json::object();
    for (const auto& [name, bytes] : files) {
        checksums[name] = text::hex64(text::fnv1a64(bytes));
        listing[name] = json{{"bytes", bytes.size()}, {"checksum", checksums[name]}};
    }
    checksums[kConfigKey] = config_checksum(json(snap.config));
    const std::string id = snapshot_id_of(checksums);
    const json manifest{{"format", kFormat},
                        {"version", kSnapshotVersion},
                        {"snapshot_id", id},
                        {"config", snap.config},
                        {"stats", stats_to_json(snap.stats)},
                        {"counts", {{"documents", snap.docs.size()}, {"sentences", snap.sentences.size()},
                                    {"topics", snap.atlas.topics.size()}, {"dimension", snap.doc_vectors.dimension()}}},
                        {"files", listing}};

    const fs::path target = fs::absolute(dir);
    const fs::path staging = target.string() + ".tmp-" + std::to_string(::getpid());
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);
    for (const auto& [name, bytes] : files) write_file(staging / name, bytes);
    write_file(staging / "manifest.json", manifest.dump(2) + "\n");
    fs::remove_all(target, ec);
    fs::rename(staging, target);
    return id;
}

std::string read_snapshot_id(const fs::path& dir)
{
    try {
        return json::parse(read_file(dir / "manifest.json")).at("snapshot_id").get<std::string>();
    } catch (const json::exception&) {
        fail(ErrorCode::corrupt_snapshot, "snapshot manifest is unreadable");
    }
}

EngineConfig read_snapshot_config(const fs::path& dir)
{
    try {
        return json::parse(read_file(dir / "manifest.json")).at("config").get<EngineConfig>();
    } catch (const json::exception&) {
        fail(ErrorCode::corrupt_snapshot, "snapshot manifest is unreadable");
    }
}

Snapshot load_snapshot(const fs::path& dir)
{
    if (!fs::is_directory(dir)) fail(ErrorCode::corrupt_snapshot, "snapshot directory does not exist", dir.string());
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::exception&) {
        fail(ErrorCode::corrupt_snapshot, "snapshot manifest is not valid JSON");
    }

    try {
        if (manifest.at("format").get<std::string>() != kFormat) {
            fail(ErrorCode::incompatible_snapshot, "not a snapshot manifest");
        }
        const int version = manifest.at("version").get<int>();
        if (version != kSnapshotVersion) {
            fail(ErrorCode::incompatible_snapshot, "snapshot version " + std::to_string(version) + " is not supported (expected " +
                                                       std::to_string(kSnapshotVersion) + ")");
        }

        std::map<std::string, std::string> files;
        std::map<std::string, std::string> checksums;
        for (const auto& [name, meta] : manifest.at("files").items()) {
            std::string bytes = read_file(dir / name);
            const std::string sum = text::hex64(text::fnv1a64(bytes));
            if (bytes.size() != meta.at("bytes").get<std::size_t>() || sum != meta.at("checksum").get<std::string>()) {
                fail(ErrorCode::corrupt_snapshot, "snapshot file failed its checksum: " + name);
            }
            checksums[name] = sum;
            files[name] = std::move(bytes);
        }
        for (const char* required : {"documents.jsonl", "sentences.jsonl", "doc_vectors.f32", "sentence_vectors.f32",
                                     "lexical.json", "topics.json", "topic_coords.f32", "assignments.tsv",
                                     "doc_coords.f32", "merge_log.jsonl", "intervals.json"}) {
            if (!files.contains(required)) fail(ErrorCode::corrupt_snapshot, std::string("snapshot lacks ") + required);
        }

        Snapshot snap;
        checksums[kConfigKey] = config_checksum(manifest.at("config"));
        snap.snapshot_id = snapshot_id_of(checksums);
        if (snap.snapshot_id != manifest.at("snapshot_id").get<std::string>()) {
            fail(ErrorCode::corrupt_snapshot, "snapshot id does not match its files");
        }
        snap.config = manifest.at("config").get<EngineConfig>();
        snap.stats = stats_from_json(manifest.at("stats"));
        const int dim = snap.config.embedding_dim;

        std::unordered_map<std::string, std::size_t> position;
        for (const auto& row : parse_jsonl(files["documents.jsonl"])) {
            Document d;
            d.doc_id = row.at("doc_id").get<std::string>();
            d.title = row.at("title").get<std::string>();
            d.body = row.at("abstract").get<std::string>();
            d.pub_date = date_from_json(row.at("pub_date"));
            d.journal = row.at("journal").get<std::string>();
            d.authors = row.at("authors").get<std::vector<std::string>>();
            if (!row.at("topic_id").is_null()) d.topic_id = row.at("topic_id").get<std::string>();
            position[d.doc_id] = snap.docs.size();
            snap.docs.push_back(std::move(d));
        }
        const std::size_t n_docs = snap.docs.size();

        for (const auto& row : parse_jsonl(files["sentences.jsonl"])) {
            snap.sentences.push_back(
                {row.at("doc_id").get<std::string>(), row.at("seq").get<std::uint32_t>(), row.at("text").get<std::string>(), {}});
        }

        auto load_vectors = [&](const std::string& bytes, std::size_t rows, auto entry_of) {
            const std::size_t expected = rows * static_cast<std::size_t>(dim) * 4;
            if (bytes.size() != expected) fail(ErrorCode::corrupt_snapshot, "snapshot: vector file has the wrong size");
            VectorIndex vx(dim);
            std::vector<float> row(static_cast<std::size_t>(dim));
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < row.size(); ++j) row[j] = read_f32(bytes, (i * row.size() + j) * 4);
                vx.add(entry_of(i), row);
            }
            return vx;
        };
        snap.doc_vectors = load_vectors(files["doc_vectors.f32"], n_docs, [&](std::size_t i) {
            return VectorIndex::Entry{snap.docs[i].doc_id, 0, static_cast<std::uint32_t>(i)};
        });
        for (std::size_t i = 0; i < n_docs; ++i) {
            const auto row = snap.doc_vectors.row(i);
            snap.docs[i].embedding.assign(row.begin(), row.end());
        }
        snap.sentence_vectors = load_vectors(files["sentence_vectors.f32"], snap.sentences.size(), [&](std::size_t i) {
            const auto& s = snap.sentences[i];
            auto it = position.find(s.doc_id);
            if (it == position.end()) fail(ErrorCode::corrupt_snapshot, "snapshot: sentence of unknown document");
            return VectorIndex::Entry{s.doc_id, s.seq, static_cast<std::uint32_t>(it->second)};
        });

        {
            const json lex = json::parse(files["lexical.json"]);
            std::vector<std::string> ids;
            ids.reserve(n_docs);
            for (const auto& d : snap.docs) ids.push_back(d.doc_id);
            snap.lexical = LexicalIndex::from_parts(std::move(ids), field_from_json(lex.at("body")),
                                                    field_from_json(lex.at("title")));
        }

        auto& atlas = snap.atlas;
        for (const auto& t : json::parse(files["topics.json"])) atlas.topics.push_back(topic_from_json(t));
        const auto topic_coords = decode_points(files["topic_coords.f32"], atlas.topics.size(), "topic coordinates");
        for (std::size_t i = 0; i < atlas.topics.size(); ++i) atlas.topics[i].coords = topic_coords[i];
        atlas.doc_coords = decode_points(files["doc_coords.f32"], n_docs, "document coordinates");
        for (std::size_t i = 0; i < n_docs; ++i) snap.docs[i].coords = atlas.doc_coords[i];

        {
            std::istringstream in(files["assignments.tsv"]);
            std::size_t i = 0;
            for (std::string line; std::getline(in, line); ++i) {
                const auto tab = line.find('\t');
                if (i >= n_docs || tab == std::string::npos || line.substr(0, tab) != snap.docs[i].doc_id) {
                    fail(ErrorCode::corrupt_snapshot, "snapshot: assignments do not match documents");
                }
                atlas.doc_assignments.push_back(line.substr(tab + 1));
            }
            if (atlas.doc_assignments.size() != n_docs) fail(ErrorCode::corrupt_snapshot, "snapshot: assignment count mismatch");
        }

        // Member lists: leaves from assignments, parents from their children, by ascending level.
        std::unordered_map<std::string, std::size_t> topic_pos;
        for (std::size_t i = 0; i < atlas.topics.size(); ++i) topic_pos[atlas.topics[i].topic_id] = i;
        atlas.members.assign(atlas.topics.size(), {});
        for (std::size_t i = 0; i < n_docs; ++i) {
            const std::string& t = atlas.doc_assignments[i];
            if (t.empty()) continue;
            auto it = topic_pos.find(t);
            if (it == topic_pos.end()) fail(ErrorCode::corrupt_snapshot, "snapshot: assignment to unknown topic " + t);
            atlas.members[it->second].push_back(i);
        }
        int max_level = 0;
        for (const auto& t : atlas.topics) max_level = std::max(max_level, t.level);
        for (int level = 0; level < max_level; ++level) {
            for (std::size_t i = 0; i < atlas.topics.size(); ++i) {
                const Topic& t = atlas.topics[i];
                if (t.level != level || !t.parent_id) continue;
                auto it = topic_pos.find(*t.parent_id);
                if (it == topic_pos.end()) fail(ErrorCode::corrupt_snapshot, "snapshot: dangling parent " + *t.parent_id);
                auto& into = atlas.members[it->second];
                std::vector<std::size_t> merged;
                std::merge(into.begin(), into.end(), atlas.members[i].begin(), atlas.members[i].end(),
                           std::back_inserter(merged));
                into = std::move(merged);
            }
        }

        for (const auto& row : parse_jsonl(files["merge_log.jsonl"])) {
            atlas.merge_log.push_back({row.at("interval_topic_id").get<std::string>(),
                                       row.at("merged_topic_id").get<std::string>(), row.at("similarity").get<double>(),
                                       row.at("absorbed").get<bool>()});
        }
        for (const auto& m : json::parse(files["intervals.json"])) snap.intervals.push_back(interval_from_json(m, position));
        return snap;
    } catch (const json::exception& e) {
        fail(ErrorCode::corrupt_snapshot, std::string("snapshot content is malformed: ") + e.what());
    }
}

}  // namespace corpusmap::index
