#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "corpusmap/embed.hpp"
#include "corpusmap/filter.hpp"
#include "corpusmap/lexical_index.hpp"
#include "corpusmap/llm.hpp"
#include "corpusmap/pipeline.hpp"
#include "corpusmap/snapshot.hpp"
#include "corpusmap/synthetic.hpp"
#include "corpusmap/vector_index.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace corpusmap;
using namespace corpusmap::index;
namespace fs = std::filesystem;

namespace {

Document doc(const std::string& id, const std::string& body, std::int32_t day = 19723, const std::string& title = "")
{
    Document d;
    d.doc_id = id;
    d.body = body;
    d.title = title;
    d.pub_date = Date(day);
    return d;
}

std::vector<oracle::TextDoc> text_docs(const std::vector<Document>& docs)
{
    std::vector<oracle::TextDoc> out;
    for (const auto& d : docs) out.push_back({d.doc_id, d.body});
    return out;
}

std::vector<std::string> ids(const std::vector<SearchHit>& hits)
{
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.doc_id);
    return out;
}

// Engine hits must carry the oracle's scores rank by rank, and every returned
// id must score what the oracle gives it. Tied ids are compared by score only.
void check_against(const std::vector<SearchHit>& got, const std::vector<oracle::Ranked>& want)
{
    REQUIRE(got.size() == want.size());
    std::map<std::pair<std::string, std::uint32_t>, double> by_id;
    for (const auto& r : want) by_id[{r.id, r.seq}] = r.score;
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].rank == i + 1);
        CHECK(std::abs(got[i].score - want[i].score) < 1e-9);
        const auto it = by_id.find({got[i].doc_id, got[i].seq.value_or(0)});
        REQUIRE(it != by_id.end());
        CHECK(std::abs(it->second - got[i].score) < 1e-9);
    }
}

std::vector<Document> random_corpus(std::size_t n, std::size_t vocab, std::mt19937_64& rng)
{
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::string body;
        const std::size_t len = 1 + rng() % 25;
        for (std::size_t j = 0; j < len; ++j) body += "w" + std::to_string(rng() % vocab) + " ";
        char id[16];
        std::snprintf(id, sizeof id, "d%04zu", i);
        docs.push_back(doc(id, body));
    }
    return docs;
}

std::string random_query(std::size_t vocab, std::mt19937_64& rng)
{
    std::string q;
    const std::size_t n = 1 + rng() % 4;
    for (std::size_t j = 0; j < n; ++j) q += "w" + std::to_string(rng() % vocab) + " ";
    return q;
}

Embedding random_embedding(int dim, std::mt19937_64& rng)
{
    const auto v = fixture::random_unit(static_cast<std::size_t>(dim), rng);
    return to_embedding(v);
}

}  // namespace

TEST_CASE("lexical index postings")
{
    const auto ix = LexicalIndex::build({doc("d1", "cancer therapy"), doc("d2", "cancer"), doc("d3", "gene therapy")});
    const auto& body = ix.field(Field::body);
    CHECK(body.postings.at("cancer") == std::vector<Posting>{{0, 1}, {1, 1}});
    CHECK(body.postings.at("therapy") == std::vector<Posting>{{0, 1}, {2, 1}});
    CHECK(body.doc_lengths == std::vector<std::uint32_t>{2, 1, 2});
    CHECK(body.avg_doc_length == doctest::Approx(5.0 / 3.0));
    CHECK(ix.document_frequency(Field::body, "cancer") == 2);
    CHECK(ix.document_frequency(Field::body, "absent") == 0);
    CHECK(ix.field(Field::title).postings.empty());
}

TEST_CASE("postings match direct counting")
{
    std::mt19937_64 rng(17);
    const auto docs = random_corpus(200, 40, rng);
    const auto ix = LexicalIndex::build(docs);
    std::map<std::string, std::vector<Posting>> want;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::map<std::string, std::uint32_t> tf;
        for (const auto& w : oracle::words(docs[i].body)) ++tf[w];
        for (const auto& [w, c] : tf) want[w].push_back({static_cast<std::uint32_t>(i), c});
        CHECK(ix.field(Field::body).doc_lengths[i] == oracle::words(docs[i].body).size());
    }
    REQUIRE(ix.field(Field::body).postings.size() == want.size());
    for (const auto& [w, p] : want) CHECK(ix.field(Field::body).postings.at(w) == p);
}

TEST_CASE("bm25 example ranks the shorter match first")
{
    const auto ix = LexicalIndex::build({doc("d1", "cancer therapy"), doc("d2", "cancer"), doc("d3", "gene therapy")});
    const auto hits = bm25_search(ix, "cancer", nullptr, 10, {});
    CHECK(ids(hits) == std::vector<std::string>{"d2", "d1"});
    // idf = ln(1 + 1.5/2.5), avgdl = 5/3, tf part = 2.2 / (1 + 1.2 (0.25 + 0.75 |d| / avgdl)).
    const double idf = std::log(1.6);
    CHECK(hits[0].score == doctest::Approx(idf * 2.2 / (1 + 1.2 * (0.25 + 0.75 * 0.6))).epsilon(1e-12));
    CHECK(hits[1].score == doctest::Approx(idf * 2.2 / (1 + 1.2 * (0.25 + 0.75 * 1.2))).epsilon(1e-12));
    CHECK(hits[0].matched_field == Field::body);
    CHECK_THROWS_AS(bm25_search(ix, " ;; ", nullptr, 10, {}), Error);
    CHECK_THROWS_AS(bm25_search(ix, "cancer", nullptr, 0, {}), Error);
    CHECK(bm25_search(ix, "unseen", nullptr, 10, {}).empty());
}

TEST_CASE("bm25 agrees with a direct-counting scorer")
{
    std::mt19937_64 rng(23);
    const auto docs = random_corpus(300, 60, rng);
    const auto ix = LexicalIndex::build(docs);
    for (int q = 0; q < 100; ++q) {
        const std::string query = random_query(60, rng);
        const std::size_t k = 1 + rng() % 20;
        check_against(bm25_search(ix, query, nullptr, k, {}), oracle::bm25(text_docs(docs), query, nullptr, k, 1.2, 0.75));
    }
    // Non-default parameters.
    const auto hits = bm25_search(ix, "w1 w2", nullptr, 15, {2.0, 0.3});
    check_against(hits, oracle::bm25(text_docs(docs), "w1 w2", nullptr, 15, 2.0, 0.3));
}

TEST_CASE("adding a query term to a document raises its score")
{
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        auto docs = random_corpus(50, 30, rng);
        const std::string term = "w" + std::to_string(rng() % 30);
        const std::size_t target = rng() % docs.size();
        auto tokens = oracle::words(docs[target].body);
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i] != term) others.push_back(i);
        if (others.empty()) continue;

        auto score_of = [&](const std::vector<Document>& ds) {
            for (const auto& h : bm25_search(LexicalIndex::build(ds), term, nullptr, ds.size(), {}))
                if (h.doc_id == docs[target].doc_id) return h.score;
            return 0.0;
        };
        const double before = score_of(docs);
        tokens[others[rng() % others.size()]] = term;
        std::string body;
        for (const auto& t : tokens) body += t + " ";
        docs[target].body = body;
        CHECK(score_of(docs) > before);
    }
}

TEST_CASE("bm25 results do not depend on insertion order")
{
    std::mt19937_64 rng(31);
    auto docs = random_corpus(150, 40, rng);
    auto shuffled = docs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto a = LexicalIndex::build(docs);
    const auto b = LexicalIndex::build(shuffled);
    for (int q = 0; q < 30; ++q) {
        const std::string query = random_query(40, rng);
        const auto ha = bm25_search(a, query, nullptr, 25, {});
        const auto hb = bm25_search(b, query, nullptr, 25, {});
        REQUIRE(ha.size() == hb.size());
        for (std::size_t i = 0; i < ha.size(); ++i) {
            CHECK(ha[i].doc_id == hb[i].doc_id);
            CHECK(std::abs(ha[i].score - hb[i].score) < 1e-12);
        }
    }
}

TEST_CASE("masked bm25 equals the unmasked ranking restricted to the mask")
{
    std::mt19937_64 rng(37);
    const auto docs = random_corpus(200, 30, rng);
    const auto ix = LexicalIndex::build(docs);
    for (int trial = 0; trial < 30; ++trial) {
        DocMask mask(docs.size());
        std::set<std::string> admitted;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            mask[i] = rng() % 3 == 0;
            if (mask[i]) admitted.insert(docs[i].doc_id);
        }
        const std::string query = random_query(30, rng);
        const auto masked = bm25_search(ix, query, &mask, 10, {});
        std::vector<std::string> expected;
        for (const auto& h : bm25_search(ix, query, nullptr, docs.size(), {}))
            if (admitted.count(h.doc_id) && expected.size() < 10) expected.push_back(h.doc_id);
        CHECK(ids(masked) == expected);
        check_against(masked, oracle::bm25(text_docs(docs), query, &admitted, 10, 1.2, 0.75));
    }
}

TEST_CASE("lexical_matches admits documents containing any query term")
{
    const std::vector<Document> docs{doc("a", "cancer therapy"), doc("b", "gene"), doc("c", "therapy gene")};
    const auto ix = LexicalIndex::build(docs);
    CHECK(lexical_matches(ix, "Therapy") == DocMask{true, false, true});
    CHECK(lexical_matches(ix, "cancer gene") == DocMask{true, true, true});
    CHECK(lexical_matches(ix, "none") == DocMask{false, false, false});
}

TEST_CASE("vector index finds a stored vector first")
{
    std::mt19937_64 rng(41);
    VectorIndex vix(16);
    std::vector<Embedding> rows;
    for (std::uint32_t i = 0; i < 50; ++i) {
        rows.push_back(random_embedding(16, rng));
        vix.add({"doc" + std::to_string(i), 0, i}, rows.back());
    }
    for (std::uint32_t i = 0; i < 50; ++i) {
        std::vector<double> q(rows[i].begin(), rows[i].end());
        const auto hits = vix.search(q, nullptr, 1);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].doc_id == "doc" + std::to_string(i));
        CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(vix.position("doc7", 0) == std::optional<std::size_t>(7));
    CHECK(!vix.position("doc7", 1));

    const Embedding zero(16, 0.0f);
    CHECK_THROWS_AS(vix.add({"z", 0, 50}, zero), Error);
    CHECK_THROWS_AS(vix.add({"doc1", 0, 1}, rows[0]), Error);
    const Embedding short_row(8, 1.0f);
    CHECK_THROWS_AS(vix.add({"s", 0, 51}, short_row), Error);
}

TEST_CASE("vector search agrees with brute-force cosine")
{
    std::mt19937_64 rng(43);
    const int dim = 32;
    VectorIndex vix(dim);
    std::vector<oracle::Row> rows;
    for (std::uint32_t i = 0; i < 10000; ++i) {
        const std::string id = "d" + std::to_string(i / 5);
        const std::uint32_t seq = i % 5;
        const auto v = random_embedding(dim, rng);
        vix.add({id, seq, i / 5}, v);
        rows.push_back({id, seq, v});
    }
    for (int q = 0; q < 100; ++q) {
        const auto query = fixture::random_unit(dim, rng);
        check_against(vix.search(query, nullptr, 10), oracle::cosine(rows, query, nullptr, 10));
    }

    DocMask mask(2000);
    std::set<std::string> admitted;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = i % 7 == 3;
        if (mask[i]) admitted.insert("d" + std::to_string(i));
    }
    for (int q = 0; q < 20; ++q) {
        const auto query = fixture::random_unit(dim, rng);
        const auto hits = vix.search(query, &mask, 10);
        check_against(hits, oracle::cosine(rows, query, &admitted, 10));
        for (const auto& h : hits) CHECK(admitted.count(h.doc_id) == 1);
    }
    CHECK(vix.search(fixture::random_unit(dim, rng), nullptr, 20000).size() == 10000);
}

TEST_CASE("metadata filter equals a predicate scan")
{
    std::mt19937_64 rng(47);
    // Forest: L1.0 over t0, t1; L1.1 over t2; t3 and t4 have no parent.
    std::vector<Topic> topics(7);
    const std::vector<std::pair<std::string, std::optional<std::string>>> shape{
        {"t0", "L1.0"}, {"t1", "L1.0"}, {"t2", "L1.1"}, {"t3", {}}, {"t4", {}}, {"L1.0", {}}, {"L1.1", {}}};
    std::map<std::string, std::optional<std::string>> parent_of;
    for (std::size_t i = 0; i < topics.size(); ++i) {
        topics[i].topic_id = shape[i].first;
        topics[i].parent_id = shape[i].second;
        parent_of[shape[i].first] = shape[i].second;
    }
    const TopicTree tree(topics);
    const std::vector<std::string> words{"Cancer", "gene", "THERAPY", "cell", "lung"};

    std::vector<Document> docs;
    for (int i = 0; i < 500; ++i) {
        Document d = doc("x" + std::to_string(i), "", 19723 + static_cast<int>(rng() % 60),
                         words[rng() % words.size()] + " " + words[rng() % words.size()]);
        if (rng() % 10) d.topic_id = "t" + std::to_string(rng() % 5);
        docs.push_back(d);
    }
    const std::vector<std::string> all_ids{"t0", "t1", "t2", "t3", "t4", "L1.0", "L1.1"};

    auto admits = [&](const Document& d, const Filter& f) {
        if (f.date_from && d.pub_date < *f.date_from) return false;
        if (f.date_to && *f.date_to < d.pub_date) return false;
        if (f.title_keyword) {
            std::string t = d.title, k = *f.title_keyword;
            for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            for (auto& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (t.find(k) == std::string::npos) return false;
        }
        if (f.topic_ids) {
            bool hit = false;
            for (std::optional<std::string> t = d.topic_id; t && !hit; t = parent_of[*t])
                hit = std::count(f.topic_ids->begin(), f.topic_ids->end(), *t) > 0;
            if (!hit) return false;
        }
        return true;
    };

    for (int trial = 0; trial < 200; ++trial) {
        Filter f;
        if (rng() % 2) f.date_from = Date(19723 + static_cast<int>(rng() % 60));
        if (rng() % 2) f.date_to = Date((f.date_from ? f.date_from->days() : 19723) + static_cast<int>(rng() % 30));
        if (rng() % 2) f.title_keyword = words[rng() % words.size()].substr(0, 1 + rng() % 3);
        if (rng() % 2) {
            std::vector<std::string> sel;
            for (const auto& t : all_ids)
                if (rng() % 3 == 0) sel.push_back(t);
            f.topic_ids = sel;
        }
        std::set<std::string> want;
        for (const auto& d : docs)
            if (admits(d, f)) want.insert(d.doc_id);
        CHECK(apply_filter(docs, f, tree) == want);

        // Conjunction: the result is the intersection of the single-predicate results.
        std::set<std::string> inter;
        for (const auto& d : docs) inter.insert(d.doc_id);
        auto keep = [&](Filter single) {
            const auto part = apply_filter(docs, single, tree);
            std::set<std::string> next;
            std::set_intersection(inter.begin(), inter.end(), part.begin(), part.end(), std::inserter(next, next.end()));
            inter = next;
        };
        Filter dates;
        dates.date_from = f.date_from;
        dates.date_to = f.date_to;
        keep(dates);
        Filter title;
        title.title_keyword = f.title_keyword;
        keep(title);
        Filter topic;
        topic.topic_ids = f.topic_ids;
        keep(topic);
        CHECK(inter == want);
    }
    CHECK(apply_filter(docs, {}, tree).size() == docs.size());
}

TEST_CASE("timeline buckets")
{
    // 2024-01-01 is a Monday.
    const std::vector<Document> docs{doc("a", "", 19723), doc("b", "", 19725), doc("c", "", 19732)};
    const DocMask all(3, true);
    const auto days = timeline_histogram(docs, all, Bucket::day);
    REQUIRE(days.size() == 10);
    CHECK(days[0] == HistogramBin{Date(19723), 1});
    CHECK(days[1] == HistogramBin{Date(19724), 0});
    CHECK(days[2] == HistogramBin{Date(19725), 1});
    CHECK(days[9] == HistogramBin{Date(19732), 1});

    const auto weeks = timeline_histogram(docs, all, Bucket::week);
    CHECK(weeks == std::vector<HistogramBin>{{Date(19723), 2}, {Date(19730), 1}});
    CHECK(timeline_histogram(docs, all, Bucket::month) == std::vector<HistogramBin>{{Date(19723), 3}});
    CHECK(timeline_histogram(docs, DocMask(3, false), Bucket::day).empty());
    CHECK(parse_bucket("week") == Bucket::week);
    CHECK(!parse_bucket("year"));
}

TEST_CASE("bucket starts follow the calendar")
{
    for (std::int32_t d = 18000; d < 21000; d += 3) {
        const Date w = bucket_start(Date(d), Bucket::week);
        CHECK(oracle::weekday(w.days()) == 0);
        CHECK(w.days() <= d);
        CHECK(d - w.days() < 7);

        const Date m = bucket_start(Date(d), Bucket::month);
        const auto c = oracle::civil(d);
        CHECK(m.days() == oracle::days_from_civil(c.y, c.m, 1));
        const auto n = oracle::civil(next_bucket(m, Bucket::month).days());
        CHECK(n.d == 1u);
        CHECK(n.m == c.m % 12 + 1);
    }
}

TEST_CASE("timeline conserves the admitted count")
{
    std::mt19937_64 rng(53);
    std::vector<Document> docs;
    for (int i = 0; i < 400; ++i) docs.push_back(doc("d" + std::to_string(i), "", 19000 + static_cast<int>(rng() % 200)));
    for (int trial = 0; trial < 30; ++trial) {
        DocMask mask(docs.size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng() % 4 != 0;
        for (Bucket b : {Bucket::day, Bucket::week, Bucket::month}) {
            const auto bins = timeline_histogram(docs, mask, b);
            std::size_t total = 0;
            for (std::size_t i = 0; i < bins.size(); ++i) {
                total += bins[i].count;
                if (i > 0) CHECK(bins[i].start == next_bucket(bins[i - 1].start, b));
            }
            CHECK(total == count(mask));
        }
    }
}

namespace {

struct Built {
    Snapshot snap;
    Built()
    {
        synthetic::CorpusOptions o;
        o.doc_count = 300;
        o.span_days = 30;
        auto corpus = synthetic::make_corpus(o);
        EngineConfig cfg;
        cfg.embedding_dim = 32;
        ingest::CorpusStats stats;
        stats.doc_count = corpus.docs.size();
        stats.min_date = corpus.docs.front().pub_date;
        stats.max_date = corpus.docs.front().pub_date;
        for (const auto& d : corpus.docs) {
            stats.min_date = std::min(stats.min_date, d.pub_date);
            stats.max_date = std::max(stats.max_date, d.pub_date);
        }
        snap = pipeline::build_snapshot(corpus.docs, stats, cfg, embed::HashEmbedder(32), llm::StubLlm());
    }
};

const Snapshot& built()
{
    static const Built b;
    return b.snap;
}

}  // namespace

TEST_CASE("snapshot round trip")
{
    fixture::TempDir dir;
    const Snapshot& snap = built();
    const std::string id = save_snapshot(snap, dir / "snap");
    CHECK(id.size() == 16);
    CHECK(read_snapshot_id(dir / "snap") == id);
    const Snapshot back = load_snapshot(dir / "snap");

    CHECK(back.snapshot_id == id);
    CHECK(back.config == snap.config);
    CHECK(back.stats == snap.stats);
    CHECK(back.lexical == snap.lexical);
    CHECK(back.doc_vectors == snap.doc_vectors);
    CHECK(back.sentence_vectors == snap.sentence_vectors);
    REQUIRE(back.docs.size() == snap.docs.size());
    for (std::size_t i = 0; i < snap.docs.size(); ++i) {
        CHECK(back.docs[i].doc_id == snap.docs[i].doc_id);
        CHECK(back.docs[i].body == snap.docs[i].body);
        CHECK(back.docs[i].embedding == snap.docs[i].embedding);
        CHECK(back.docs[i].topic_id == snap.docs[i].topic_id);
        CHECK(back.docs[i].coords == snap.docs[i].coords);
    }
    REQUIRE(back.sentences.size() == snap.sentences.size());
    for (std::size_t i = 0; i < snap.sentences.size(); ++i) CHECK(back.sentences[i].text == snap.sentences[i].text);

    REQUIRE(back.atlas.topics.size() == snap.atlas.topics.size());
    for (std::size_t i = 0; i < snap.atlas.topics.size(); ++i) {
        const auto& a = snap.atlas.topics[i];
        const auto& b = back.atlas.topics[i];
        CHECK(b.topic_id == a.topic_id);
        CHECK(b.label == a.label);
        CHECK(b.keywords == a.keywords);
        CHECK(b.size == a.size);
        CHECK(b.parent_id == a.parent_id);
        CHECK(b.level == a.level);
        CHECK(b.source_intervals == a.source_intervals);
        CHECK(b.coords == a.coords);
        CHECK(back.atlas.members[i] == snap.atlas.members[i]);
    }
    CHECK(back.atlas.doc_assignments == snap.atlas.doc_assignments);
    CHECK(back.atlas.merge_log == snap.atlas.merge_log);
    CHECK(back.intervals.size() == snap.intervals.size());

    // Saving the loaded snapshot reproduces the same bytes.
    CHECK(save_snapshot(back, dir / "again") == id);
}

TEST_CASE("damaged snapshots are rejected")
{
    fixture::TempDir dir;
    auto code_of = [](const fs::path& p) {
        try {
            load_snapshot(p);
        } catch (const Error& e) {
            return e.code();
        }
        FAIL("expected an Error");
        return ErrorCode::io;
    };

    fs::create_directories(dir / "empty");
    CHECK(code_of(dir / "empty") == ErrorCode::corrupt_snapshot);

    save_snapshot(built(), dir / "truncated");
    const fs::path vectors = dir / "truncated" / "doc_vectors.f32";
    fs::resize_file(vectors, fs::file_size(vectors) - 4);
    CHECK(code_of(dir / "truncated") == ErrorCode::corrupt_snapshot);

    save_snapshot(built(), dir / "flipped");
    {
        std::fstream f(dir / "flipped" / "sentence_vectors.f32", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(10);
        f.put('\x7f');
    }
    CHECK(code_of(dir / "flipped") == ErrorCode::corrupt_snapshot);

    save_snapshot(built(), dir / "old");
    nlohmann::json m;
    std::ifstream(dir / "old" / "manifest.json") >> m;
    m["version"] = kSnapshotVersion + 1;
    std::ofstream(dir / "old" / "manifest.json") << m.dump();
    CHECK(code_of(dir / "old") == ErrorCode::incompatible_snapshot);

    save_snapshot(built(), dir / "missing");
    fs::remove(dir / "missing" / "topics.json");
    CHECK(code_of(dir / "missing") == ErrorCode::corrupt_snapshot);
}
