#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "corpusmap/api.hpp"
#include "corpusmap/engine.hpp"
#include "corpusmap/pipeline.hpp"
#include "corpusmap/server.hpp"
#include "corpusmap/synthetic.hpp"
#include "corpusmap/text.hpp"
#include "fixtures.hpp"

using namespace corpusmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

index::Snapshot make_snapshot(std::size_t docs, std::uint64_t seed)
{
    synthetic::CorpusOptions o;
    o.doc_count = docs;
    o.span_days = 30;
    o.seed = seed;
    auto corpus = synthetic::make_corpus(o);
    EngineConfig cfg;
    cfg.embedding_dim = 64;
    ingest::CorpusStats stats;
    stats.doc_count = corpus.docs.size();
    stats.min_date = corpus.docs.front().pub_date;
    stats.max_date = corpus.docs.front().pub_date;
    for (const auto& d : corpus.docs) {
        stats.min_date = std::min(stats.min_date, d.pub_date);
        stats.max_date = std::max(stats.max_date, d.pub_date);
    }
    return pipeline::build_snapshot(corpus.docs, stats, cfg, embed::HashEmbedder(64), llm::StubLlm());
}

std::shared_ptr<const engine::Engine> make_engine(std::size_t docs = 300, std::uint64_t seed = 42)
{
    auto snap = make_snapshot(docs, seed);
    snap.snapshot_id = "test-" + std::to_string(seed);
    return std::make_shared<const engine::Engine>(std::move(snap), std::make_unique<embed::HashEmbedder>(64),
                                                  std::make_unique<llm::StubLlm>());
}

const engine::Engine& shared_engine()
{
    static const auto e = make_engine();
    return *e;
}

api::Response get(const engine::Engine* e, const std::string& path, std::map<std::string, std::string> params = {})
{
    return api::handle(e, {"GET", path, std::move(params), {}}, false);
}

api::Response post_qa(const engine::Engine* e, const json& body)
{
    return api::handle(e, {"POST", "/qa", {}, body.dump()}, false);
}

std::string error_code(const api::Response& r)
{
    return r.body.at("error").at("code").get<std::string>();
}

// Independent admission check: dates, title substring (case-insensitive) and
// topic ids matched against the document's topic or any of its ancestors.
bool admits(const engine::Engine& e, const Document& d, const Filter& f)
{
    if (f.date_from && d.pub_date < *f.date_from) return false;
    if (f.date_to && d.pub_date > *f.date_to) return false;
    if (f.title_keyword) {
        std::string title = d.title, kw = *f.title_keyword;
        for (auto& c : title) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        for (auto& c : kw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (title.find(kw) == std::string::npos) return false;
    }
    if (f.topic_ids) {
        if (!d.topic_id) return false;
        const std::set<std::string> wanted(f.topic_ids->begin(), f.topic_ids->end());
        bool hit = false;
        for (const Topic* t = e.topic(*d.topic_id); t != nullptr; t = t->parent_id ? e.topic(*t->parent_id) : nullptr) {
            if (wanted.contains(t->topic_id)) {
                hit = true;
                break;
            }
        }
        if (!hit) return false;
    }
    return true;
}

Filter random_filter(const engine::Engine& e, std::mt19937_64& rng)
{
    const auto& snap = e.snapshot();
    Filter f;
    if (rng() % 2) {
        const auto a = snap.stats.min_date.days() + static_cast<std::int32_t>(rng() % 30);
        const auto b = a + static_cast<std::int32_t>(rng() % 15);
        f.date_from = Date(a);
        f.date_to = Date(b);
    }
    if (rng() % 2) {
        const auto& topics = snap.atlas.topics;
        std::vector<std::string> ids{topics[rng() % topics.size()].topic_id};
        if (rng() % 2) ids.push_back(topics[rng() % topics.size()].topic_id);
        f.topic_ids = ids;
    }
    if (rng() % 3 == 0) {
        const auto words = text::tokenize(snap.docs[rng() % snap.docs.size()].title);
        if (!words.empty()) f.title_keyword = words[rng() % words.size()];
    }
    return f;
}

int run_cli(const std::string& args, std::string* out = nullptr)
{
    fixture::TempDir log;
    const std::string cmd = std::string(CORPUSMAP_CLI) + " " + args + " > " + (log / "out").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (out != nullptr) {
        std::ifstream f(log / "out");
        std::stringstream ss;
        ss << f.rdbuf();
        *out = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p)
{
    std::ifstream f(p);
    return json::parse(f);
}

}  // namespace

TEST_CASE("unknown routes and methods are 404")
{
    const auto& e = shared_engine();
    auto r = get(&e, "/nope");
    CHECK(r.status == 404);
    CHECK(error_code(r) == "not_found");
    r = api::handle(&e, {"POST", "/search", {}, "{}"}, false);
    CHECK(r.status == 404);
    r = api::handle(&e, {"GET", "/qa", {}, {}}, false);
    CHECK(r.status == 404);
}

TEST_CASE("requests before the snapshot loads get 503")
{
    for (const std::string path : {"/health", "/map", "/search", "/timeline"}) {
        const auto r = get(nullptr, path, {{"q", "x"}});
        CHECK(r.status == 503);
    }
    CHECK(api::handle(nullptr, {"POST", "/qa", {}, "{}"}, false).status == 503);
}

TEST_CASE("health reports the snapshot")
{
    const auto& e = shared_engine();
    const auto r = get(&e, "/health");
    REQUIRE(r.status == 200);
    CHECK(r.body["doc_count"] == e.snapshot().stats.doc_count);
    CHECK(r.body["doc_count"] == 300);
    CHECK(r.body["snapshot_id"] == "test-42");
    CHECK(r.body["sentence_count"] == e.snapshot().sentences.size());
}

TEST_CASE("map returns every document and the full hierarchy")
{
    const auto& e = shared_engine();
    const auto& snap = e.snapshot();
    const auto r = get(&e, "/map");
    REQUIRE(r.status == 200);
    REQUIRE(r.body["points"].size() == snap.docs.size());
    CHECK(r.body["truncated"] == false);
    CHECK(r.body["topics"].size() == snap.atlas.topics.size());
    for (std::size_t i = 0; i < snap.docs.size(); ++i) {
        const auto& p = r.body["points"][i];
        CHECK(p["doc_id"] == snap.docs[i].doc_id);
        CHECK(p["x"].get<double>() == snap.atlas.doc_coords[i].x);
        CHECK(p["y"].get<double>() == snap.atlas.doc_coords[i].y);
    }
}

TEST_CASE("map with one topic returns that topic and its descendants")
{
    const auto& e = shared_engine();
    const auto& topics = e.snapshot().atlas.topics;
    for (const auto& t : topics) {
        const json filter{{"topic_ids", {t.topic_id}}};
        const auto r = get(&e, "/map", {{"filter", filter.dump()}});
        REQUIRE(r.status == 200);
        CHECK(r.body["points"].size() == t.size);
        for (const auto& p : r.body["points"]) {
            const Document* d = e.document(p["doc_id"].get<std::string>());
            REQUIRE(d != nullptr);
            Filter f;
            f.topic_ids = std::vector<std::string>{t.topic_id};
            CHECK(admits(e, *d, f));
        }
    }
}

TEST_CASE("map point counts match an independent filter scan")
{
    const auto& e = shared_engine();
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Filter f = random_filter(e, rng);
        const auto r = get(&e, "/map", {{"filter", api::filter_to_json(f).dump()}});
        REQUIRE(r.status == 200);
        std::size_t want = 0;
        for (const auto& d : e.snapshot().docs) want += admits(e, d, f) ? 1 : 0;
        CHECK(r.body["points"].size() == want);
        CHECK(r.body["total"] == want);
    }
}

TEST_CASE("malformed filters are bad requests")
{
    const auto& e = shared_engine();
    for (const std::string bad : {"{", "[1]", R"({"colour":"red"})", R"({"date_from":"2024-13-01"})",
                                  R"({"date_from":"2024-02-01","date_to":"2024-01-01"})",
                                  R"({"query":{"text":"x","mode":"fuzzy"}})", R"({"topic_ids":"t0"})"}) {
        for (const std::string path : {"/map", "/timeline", "/search"}) {
            const auto r = get(&e, path, {{"filter", bad}, {"q", "cancer"}});
            CHECK_MESSAGE(r.status == 400, path << " " << bad);
            CHECK(error_code(r) == "bad_request");
        }
        const auto qa = post_qa(&e, json{{"mode", "document"}, {"query", "x"}, {"filter", json::parse(bad, nullptr, false)}});
        CHECK(qa.status == 400);
    }
}

TEST_CASE("search parameters are validated")
{
    const auto& e = shared_engine();
    CHECK(get(&e, "/search", {}).status == 400);
    CHECK(get(&e, "/search", {{"q", "   "}}).status == 400);
    CHECK(get(&e, "/search", {{"q", "x"}, {"mode", "fuzzy"}}).status == 400);
    CHECK(get(&e, "/search", {{"q", "x"}, {"field", "abstract"}}).status == 400);
    CHECK(get(&e, "/search", {{"q", "x"}, {"mode", "semantic"}, {"field", "title"}}).status == 400);
    CHECK(get(&e, "/search", {{"q", "x"}, {"k", "0"}}).status == 400);
    CHECK(get(&e, "/search", {{"q", "x"}, {"k", "ten"}}).status == 400);
    CHECK(get(&e, "/timeline", {{"bucket", "year"}}).status == 400);
}

TEST_CASE("lexical title search finds an exact title word")
{
    const auto& e = shared_engine();
    const Document& d = e.snapshot().docs[17];
    const auto words = text::tokenize(d.title);
    REQUIRE(!words.empty());
    const auto r = get(&e, "/search", {{"q", words.back()}, {"field", "title"}, {"k", "100"}});
    REQUIRE(r.status == 200);
    bool found = false;
    for (const auto& h : r.body["hits"]) {
        found = found || h["doc_id"] == d.doc_id;
        CHECK(h["matched_field"] == "title");
    }
    CHECK(found);
}

TEST_CASE("semantic self-match ranks the document first")
{
    const auto& e = shared_engine();
    for (const std::size_t i : {0u, 123u, 299u}) {
        const Document& d = e.snapshot().docs[i];
        const auto r = get(&e, "/search", {{"q", d.title + " " + d.body}, {"mode", "semantic"}});
        REQUIRE(r.status == 200);
        REQUIRE(!r.body["hits"].empty());
        const auto& top = r.body["hits"][0];
        CHECK(top["doc_id"] == d.doc_id);
        CHECK(top["rank"] == 1);
        CHECK(top["title"] == d.title);
        CHECK(top["pub_date"] == d.pub_date.iso());
        CHECK(top["journal"] == d.journal);
        CHECK(top["authors"] == d.authors);
    }
}

TEST_CASE("k and offset page through the ranking")
{
    const auto& e = shared_engine();
    const auto all = get(&e, "/search", {{"q", "patients"}, {"k", "20"}});
    REQUIRE(all.status == 200);
    const auto five = get(&e, "/search", {{"q", "patients"}, {"k", "5"}});
    REQUIRE(five.body["hits"].size() <= 5);
    const auto next = get(&e, "/search", {{"q", "patients"}, {"k", "5"}, {"offset", "5"}});
    const auto& hits = all.body["hits"];
    for (std::size_t i = 0; i < five.body["hits"].size(); ++i) CHECK(five.body["hits"][i]["doc_id"] == hits[i]["doc_id"]);
    for (std::size_t i = 0; i < next.body["hits"].size(); ++i) {
        CHECK(next.body["hits"][i]["doc_id"] == hits[i + 5]["doc_id"]);
        CHECK(next.body["hits"][i]["rank"] == i + 6);
    }
}

TEST_CASE("timeline through the API")
{
    const auto& e = shared_engine();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Filter f = random_filter(e, rng);
        const std::string wire = api::filter_to_json(f).dump();
        const auto map = get(&e, "/map", {{"filter", wire}});
        for (const std::string bucket : {"day", "week", "month"}) {
            const auto r = get(&e, "/timeline", {{"filter", wire}, {"bucket", bucket}});
            REQUIRE(r.status == 200);
            std::size_t sum = 0;
            for (const auto& b : r.body["bins"]) sum += b["count"].get<std::size_t>();
            CHECK(sum == map.body["points"].size());
            CHECK(r.body["total"] == sum);
        }
    }
    // An empty result has no bins.
    const json none{{"title_keyword", "zzzzqqqq"}};
    const auto r = get(&e, "/timeline", {{"filter", none.dump()}});
    CHECK(r.status == 200);
    CHECK(r.body["bins"].empty());
}

TEST_CASE("qa through the API")
{
    const auto& e = shared_engine();
    SUBCASE("document mode with an empty filter result is empty_result")
    {
        const auto r = post_qa(&e, json{{"mode", "document"}, {"query", "what treatments work?"},
                                        {"filter", {{"title_keyword", "zzzzqqqq"}}}});
        CHECK(r.status == 422);
        CHECK(error_code(r) == "empty_result");
    }
    SUBCASE("corpus mode with explicit topics cites exactly those topics")
    {
        const auto& topics = e.snapshot().atlas.topics;
        const std::vector<std::string> ids{topics[0].topic_id, topics[topics.size() / 2].topic_id};
        const auto r = post_qa(&e, json{{"mode", "corpus"}, {"query", "what is studied?"}, {"topic_ids", ids}});
        REQUIRE(r.status == 200);
        CHECK(r.body["citations"] == ids);
        CHECK(r.body["mode"] == "corpus");
    }
    SUBCASE("unknown explicit topic is not_found")
    {
        const auto r = post_qa(&e, json{{"mode", "corpus"}, {"query", "q"}, {"topic_ids", {"nope"}}});
        CHECK(r.status == 404);
    }
    SUBCASE("the stub answer is deterministic")
    {
        const json req{{"mode", "document"}, {"query", "which patients improved after treatment?"}};
        const auto a = post_qa(&e, req);
        const auto b = post_qa(&e, req);
        REQUIRE(a.status == 200);
        CHECK(a.body.dump() == b.body.dump());
        CHECK(!a.body["contexts"].empty());
        for (const auto& c : a.body["contexts"]) CHECK(c.contains("seq"));
    }
    SUBCASE("malformed bodies")
    {
        CHECK(api::handle(&e, {"POST", "/qa", {}, "not json"}, false).status == 400);
        CHECK(post_qa(&e, json{{"mode", "poem"}, {"query", "x"}}).status == 400);
        CHECK(post_qa(&e, json{{"mode", "document"}, {"query", ""}}).status == 400);
        CHECK(post_qa(&e, json{{"mode", "document"}, {"query", "x"}, {"extra", 1}}).status == 400);
    }
}

TEST_CASE("production mode hides error detail")
{
    const api::ApiError err{api::ApiCode::snapshot_corrupt, "snapshot is damaged", "/srv/data/snapshot/docs.bin"};
    const json dev = api::error_body(err, false);
    const json prod = api::error_body(err, true);
    CHECK(dev["error"]["detail"] == "/srv/data/snapshot/docs.bin");
    CHECK(!prod["error"].contains("detail"));
    CHECK(prod["error"]["code"] == "snapshot_corrupt");
    CHECK(prod.dump().find("/srv") == std::string::npos);
}

TEST_CASE("every engine error maps to one api code")
{
    using api::ApiCode;
    CHECK(api::api_code(ErrorCode::invalid_argument) == ApiCode::bad_request);
    CHECK(api::api_code(ErrorCode::not_found) == ApiCode::not_found);
    CHECK(api::api_code(ErrorCode::empty_context) == ApiCode::empty_result);
    CHECK(api::api_code(ErrorCode::provider_unavailable) == ApiCode::provider_unavailable);
    CHECK(api::api_code(ErrorCode::corrupt_snapshot) == ApiCode::snapshot_corrupt);
    CHECK(api::api_code(ErrorCode::incompatible_snapshot) == ApiCode::snapshot_corrupt);
    CHECK(api::http_status(ApiCode::bad_request) == 400);
    CHECK(api::http_status(ApiCode::not_found) == 404);
    CHECK(api::http_status(ApiCode::empty_result) == 422);
    CHECK(api::http_status(ApiCode::provider_unavailable) == 502);
    CHECK(api::http_status(ApiCode::unavailable) == 503);
}

TEST_CASE("payloads round-trip through JSON")
{
    const auto& e = shared_engine();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        Filter f = random_filter(e, rng);
        if (i % 4 == 0) f.query = TextQuery{"heart valve", i % 8 == 0 ? QueryMode::semantic : QueryMode::lexical};
        CHECK(api::filter_from_json(json::parse(api::filter_to_json(f).dump())) == f);

        engine::QaRequest q;
        q.mode = i % 2 ? qa::Mode::corpus : qa::Mode::document;
        q.query = "question " + std::to_string(i);
        q.filter = f;
        if (q.mode == qa::Mode::corpus && i % 3 == 0) q.topic_ids = std::vector<std::string>{"t0", "t1"};
        const auto back = api::qa_request_from_json(json::parse(api::qa_request_to_json(q).dump()));
        CHECK(back.mode == q.mode);
        CHECK(back.query == q.query);
        CHECK(back.filter == q.filter);
        CHECK(back.topic_ids == q.topic_ids);
    }
    const json req{{"mode", "document"}, {"query", "which patients improved after treatment?"}};
    const auto a = e.ask(api::qa_request_from_json(req));
    CHECK(api::answer_from_json(json::parse(api::answer_to_json(a).dump())) == a);
    const auto c = e.ask(api::qa_request_from_json(json{{"mode", "corpus"}, {"query", "what is studied?"}}));
    CHECK(api::answer_from_json(json::parse(api::answer_to_json(c).dump())) == c);
}

TEST_CASE("the filter grammar is shared by every endpoint")
{
    const auto& e = shared_engine();
    const Document& d = e.snapshot().docs[40];
    const json filter{{"date_from", d.pub_date.iso()}, {"date_to", d.pub_date.iso()}};
    const auto map = get(&e, "/map", {{"filter", filter.dump()}});
    std::set<std::string> admitted;
    for (const auto& p : map.body["points"]) admitted.insert(p["doc_id"].get<std::string>());
    CHECK(admitted.contains(d.doc_id));

    const auto search = get(&e, "/search", {{"q", d.title}, {"filter", filter.dump()}, {"k", "100"}});
    for (const auto& h : search.body["hits"]) CHECK(admitted.contains(h["doc_id"].get<std::string>()));

    const auto qa = post_qa(&e, json{{"mode", "document"}, {"query", d.title}, {"filter", filter}});
    REQUIRE(qa.status == 200);
    for (const auto& c : qa.body["citations"]) CHECK(admitted.contains(c.get<std::string>()));
}

TEST_CASE("HTTP server serves the API and swaps snapshots")
{
    engine::EngineSlot slot;
    std::ostringstream log;
    server::Server http(slot, {"127.0.0.1", 0, "http://ui.local", 4, false, &log});
    const int port = http.bind();
    REQUIRE(port > 0);
    std::thread serving([&] { http.run(); });
    httplib::Client client("127.0.0.1", port);

    auto res = client.Get("/health");
    REQUIRE(res);
    CHECK(res->status == 503);

    const auto first = make_engine(200, 1);
    slot.replace(first);
    res = client.Get("/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["snapshot_id"] == "test-1");
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://ui.local");

    res = client.Get("/search?q=patients&k=3");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["hits"].size() <= 3);

    const std::string filter = httplib::detail::encode_url(json{{"title_keyword", "zzzzqqqq"}}.dump());
    res = client.Get(("/map?filter=" + filter).c_str());
    REQUIRE(res);
    CHECK(json::parse(res->body)["points"].empty());

    res = client.Post("/qa", json{{"mode", "document"}, {"query", "what improved?"}}.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    res = client.Get("/missing");
    REQUIRE(res);
    CHECK(res->status == 404);

    // A reader holding the old engine keeps a consistent view across the swap.
    const auto held = slot.get();
    slot.replace(make_engine(200, 2));
    CHECK(held->health().snapshot_id == "test-1");
    res = client.Get("/health");
    REQUIRE(res);
    CHECK(json::parse(res->body)["snapshot_id"] == "test-2");

    http.stop();
    serving.join();
    const std::string lines = log.str();
    CHECK(lines.find("\"route\":\"/health\"") != std::string::npos);
    CHECK(lines.find("\"status\":503") != std::string::npos);
    CHECK(std::count(lines.begin(), lines.end(), '\n') >= 7);
}

TEST_CASE("bind addresses")
{
    CHECK(server::parse_bind("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
    CHECK_THROWS_AS(server::parse_bind("localhost"), Error);
    CHECK_THROWS_AS(server::parse_bind("host:99999"), Error);
    CHECK_THROWS_AS(server::parse_bind("host:abc"), Error);
}

TEST_CASE("CLI offline path")
{
    fixture::TempDir dir;
    const std::string work = (dir / "work").string();
    const std::string corpus = (dir / "corpus.jsonl").string();

    SUBCASE("qa without a build is a usage error")
    {
        CHECK(run_cli("qa " + work + " --mode document -q 'what?'") == 2);
        CHECK(run_cli("build " + work + " --quiet") == 2);
        CHECK(run_cli("ingest /nonexistent/file.jsonl " + work) == 2);
        CHECK(run_cli("frobnicate") == 2);
    }
    SUBCASE("ingest, build and search")
    {
        REQUIRE(run_cli("synth " + corpus + " --docs 250 --days 40 --seed 3") == 0);
        std::string out;
        REQUIRE(run_cli("ingest " + corpus + " " + work, &out) == 0);
        CHECK(out.find("ingested 250 documents") != std::string::npos);
        REQUIRE(run_cli("build " + work + " --quiet") == 0);
        const json manifest1 = read_json(fs::path(work) / "snapshot" / "manifest.json");
        REQUIRE(run_cli("build " + work + " --quiet") == 0);
        const json manifest2 = read_json(fs::path(work) / "snapshot" / "manifest.json");
        CHECK(manifest1 == manifest2);
        CHECK(!fs::exists(fs::path(work) / "build.lock"));

        REQUIRE(run_cli("search " + work + " -q patients -k 4", &out) == 0);
        const json hits = json::parse(out);
        CHECK(!hits["hits"].empty());
        CHECK(hits["hits"].size() <= 4);

        CHECK(run_cli("qa " + work + " --mode corpus -q 'what is studied?'", &out) == 0);
        CHECK(json::parse(out)["mode"] == "corpus");
        CHECK(run_cli("qa " + work + " --mode document -q 'x' --filter '{\"title_keyword\":\"zzzzqqqq\"}'") == 1);
        CHECK(run_cli("qa " + work + " --mode document -q 'x' --filter '{oops'") == 2);
        CHECK(run_cli("search " + work + " -q x --mode semantic --field title") == 1);
    }
}
