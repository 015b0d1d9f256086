// corpusmap: ingest, build, serve and query corpus snapshots from the shell.

#include <atomic>
#include <csignal>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "corpusmap/api.hpp"
#include "corpusmap/config.hpp"
#include "corpusmap/engine.hpp"
#include "corpusmap/error.hpp"
#include "corpusmap/ingest.hpp"
#include "corpusmap/pipeline.hpp"
#include "corpusmap/server.hpp"
#include "corpusmap/snapshot.hpp"
#include "corpusmap/synthetic.hpp"

namespace fs = std::filesystem;
using namespace corpusmap;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEngine = 1;
constexpr int kExitUsage = 2;

constexpr const char* kCorpusFile = "corpus.jsonl";
constexpr const char* kConfigFile = "config.json";
constexpr const char* kIngestReport = "ingest.json";
constexpr const char* kSnapshotDir = "snapshot";
constexpr const char* kLockFile = "build.lock";

// A prerequisite produced by an earlier command is missing.
struct MissingArtifact {
    std::string what;
};

void require(const fs::path& p, const std::string& produced_by)
{
    if (!fs::exists(p)) throw MissingArtifact{p.string() + " (run `corpusmap " + produced_by + "` first)"};
}

EngineConfig workdir_config(const fs::path& workdir)
{
    EngineConfig cfg = fs::exists(workdir / kConfigFile) ? load_config(workdir / kConfigFile) : EngineConfig{};
    apply_env_overrides(cfg);
    return cfg;
}

std::shared_ptr<const engine::Engine> open_engine(const fs::path& workdir)
{
    require(workdir / kSnapshotDir / "manifest.json", "build");
    return engine::Engine::open(workdir / kSnapshotDir);
}

class BuildLock {
public:
    explicit BuildLock(fs::path path) : path_(std::move(path))
    {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) fail(ErrorCode::io, "another build holds the workdir lock " + path_.filename().string(), path_.string());
        const std::string pid = std::to_string(::getpid()) + "\n";
        if (::write(fd_, pid.data(), pid.size()) < 0) {
            // The pid is informational only.
        }
    }
    ~BuildLock()
    {
        ::close(fd_);
        std::error_code ec;
        fs::remove(path_, ec);
    }
    BuildLock(const BuildLock&) = delete;
    BuildLock& operator=(const BuildLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

int cmd_ingest(const std::string& corpus, const fs::path& workdir, const std::string& config_path)
{
    if (!fs::exists(corpus)) throw MissingArtifact{corpus};
    EngineConfig cfg = config_path.empty() ? EngineConfig{} : load_config(config_path);
    cfg.validate();
    const auto parsed = ingest::parse_corpus_file(corpus, cfg.interval_days);
    fs::create_directories(workdir);
    {
        std::ofstream out(workdir / kCorpusFile, std::ios::binary | std::ios::trunc);
        ingest::write_corpus(out, parsed.docs);
        if (!out) fail(ErrorCode::io, "cannot write the ingested corpus", (workdir / kCorpusFile).string());
    }
    {
        std::ofstream out(workdir / kConfigFile, std::ios::trunc);
        out << json(cfg).dump(2) << "\n";
    }
    const json report{{"doc_count", parsed.stats.doc_count},
                      {"min_date", parsed.stats.min_date.iso()},
                      {"max_date", parsed.stats.max_date.iso()},
                      {"interval_count", parsed.stats.interval_count},
                      {"skipped", parsed.stats.skipped},
                      {"duplicates", parsed.stats.duplicates},
                      {"diagnostics", parsed.diagnostics}};
    std::ofstream(workdir / kIngestReport, std::ios::trunc) << report.dump(2) << "\n";
    std::cout << "ingested " << parsed.stats.doc_count << " documents (" << parsed.stats.skipped << " skipped, "
              << parsed.stats.duplicates << " duplicates) spanning " << parsed.stats.min_date.iso() << " to "
              << parsed.stats.max_date.iso() << "\n";
    return kExitOk;
}

int cmd_build(const fs::path& workdir, bool quiet)
{
    require(workdir / kCorpusFile, "ingest");
    const EngineConfig cfg = workdir_config(workdir);
    BuildLock lock(workdir / kLockFile);
    auto parsed = ingest::parse_corpus_file((workdir / kCorpusFile).string(), cfg.interval_days);
    const auto embedder = embed::make_provider(cfg);
    const auto llm = llm::make_llm(cfg);
    auto progress = [quiet](std::string_view step) {
        if (!quiet) std::cerr << "build: " << step << "\n";
    };
    const auto snap = pipeline::build_snapshot(std::move(parsed.docs), parsed.stats, cfg, *embedder, *llm, progress);
    const std::string id = index::save_snapshot(snap, workdir / kSnapshotDir);
    std::cout << "snapshot " << id << ": " << snap.docs.size() << " documents, " << snap.sentences.size()
              << " sentences, " << snap.atlas.leaf_count() << " leaf topics\n";
    return kExitOk;
}

std::atomic<bool> g_stop{false};
std::atomic<bool> g_reload{false};

extern "C" void on_signal(int sig)
{
    if (sig == SIGHUP) {
        g_reload = true;
    } else {
        g_stop = true;
    }
}

int cmd_serve(const fs::path& workdir, std::string bind, std::string cors, bool production)
{
    const fs::path snapshot_dir = workdir / kSnapshotDir;
    require(snapshot_dir / "manifest.json", "build");
    EngineConfig cfg = index::read_snapshot_config(snapshot_dir);
    apply_env_overrides(cfg);
    if (bind.empty()) bind = cfg.bind_address;
    if (cors.empty()) cors = cfg.cors_origin;
    const auto [host, port] = server::parse_bind(bind);

    engine::EngineSlot slot;
    server::ServerOptions opts{host, port, cors, cfg.max_concurrent_requests, production || cfg.production_mode,
                               &std::clog};
    server::Server http(slot, opts);
    const int bound = http.bind();
    std::thread serving([&] { http.run(); });
    std::cerr << "serving on " << host << ":" << bound << "\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::signal(SIGHUP, on_signal);
    int rc = kExitOk;
    try {
        slot.replace(engine::Engine::open(snapshot_dir));
        std::cerr << "snapshot " << slot.get()->health().snapshot_id << " loaded\n";
    } catch (const Error& e) {
        std::cerr << "error: " << api::to_string(api::api_code(e.code())) << ": " << e.what() << "\n";
        g_stop = true;
        rc = kExitEngine;
    }
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (g_reload.exchange(false)) {
            try {
                slot.replace(engine::Engine::open(snapshot_dir));
                std::cerr << "snapshot " << slot.get()->health().snapshot_id << " reloaded\n";
            } catch (const Error& e) {
                std::cerr << "reload failed, keeping the previous snapshot: " << e.what() << "\n";
            }
        }
    }
    http.stop();
    serving.join();
    return rc;
}

int print_response(const api::Response& r)
{
    (r.status == 200 ? std::cout : std::cerr) << r.body.dump(2) << "\n";
    return r.status == 200 ? kExitOk : kExitEngine;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Build and explore topic maps of document collections"};
    app.require_subcommand(1);

    std::string corpus, workdir, config_path, bind, cors, query, mode, field = "body", filter, out;
    std::vector<std::string> topics;
    std::size_t k = 10, offset = 0, docs = 2000, themes = 6;
    int days = 90;
    std::uint64_t seed = 42;
    bool production = false, quiet = false;

    auto* ingest_cmd = app.add_subcommand("ingest", "Validate a JSONL corpus and stage it in a workdir");
    ingest_cmd->add_option("corpus", corpus, "JSONL file of documents")->required();
    ingest_cmd->add_option("workdir", workdir, "Working directory")->required();
    ingest_cmd->add_option("--config", config_path, "Engine config (JSON)");

    auto* build_cmd = app.add_subcommand("build", "Embed, cluster, merge, lay out and snapshot the corpus");
    build_cmd->add_option("workdir", workdir, "Working directory")->required();
    build_cmd->add_flag("--quiet", quiet, "No progress output");

    auto* serve_cmd = app.add_subcommand("serve", "Serve the snapshot over HTTP");
    serve_cmd->add_option("workdir", workdir, "Working directory")->required();
    serve_cmd->add_option("--bind", bind, "host:port (default from config)");
    serve_cmd->add_option("--cors-origin", cors, "Allowed browser origin");
    serve_cmd->add_flag("--production", production, "Hide internal details in error responses");

    auto* search_cmd = app.add_subcommand("search", "Query the snapshot without a server");
    search_cmd->add_option("workdir", workdir, "Working directory")->required();
    search_cmd->add_option("-q,--query", query, "Query text")->required();
    search_cmd->add_option("--mode", mode, "lexical or semantic")->check(CLI::IsMember({"lexical", "semantic"}));
    search_cmd->add_option("--field", field, "body or title")->check(CLI::IsMember({"body", "title"}));
    search_cmd->add_option("--filter", filter, "Filter as a JSON object");
    search_cmd->add_option("-k", k, "Number of hits");
    search_cmd->add_option("--offset", offset, "Hits to skip");

    auto* qa_cmd = app.add_subcommand("qa", "Ask a question about the corpus");
    qa_cmd->add_option("workdir", workdir, "Working directory")->required();
    qa_cmd->add_option("-q,--query", query, "Question")->required();
    qa_cmd->add_option("--mode", mode, "corpus or document")->required()->check(CLI::IsMember({"corpus", "document"}));
    qa_cmd->add_option("--filter", filter, "Filter as a JSON object (document mode)");
    qa_cmd->add_option("--topic", topics, "Topic id to answer from (corpus mode, repeatable)");

    auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic corpus");
    synth_cmd->add_option("out", out, "Output JSONL file")->required();
    synth_cmd->add_option("--docs", docs, "Number of documents");
    synth_cmd->add_option("--themes", themes, "Number of themes");
    synth_cmd->add_option("--days", days, "Date span in days");
    synth_cmd->add_option("--seed", seed, "Random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(corpus, workdir, config_path);
        if (*build_cmd) return cmd_build(workdir, quiet);
        if (*serve_cmd) return cmd_serve(workdir, bind, cors, production);
        if (*synth_cmd) {
            synthetic::CorpusOptions o;
            o.doc_count = docs;
            o.theme_count = themes;
            o.span_days = days;
            o.seed = seed;
            std::ofstream f(out, std::ios::binary | std::ios::trunc);
            ingest::write_corpus(f, synthetic::make_corpus(o).docs);
            if (!f) fail(ErrorCode::io, "cannot write " + out);
            return kExitOk;
        }
        if (*search_cmd) {
            const auto engine = open_engine(workdir);
            api::Request r{"GET", "/search", {{"q", query}, {"field", field}, {"k", std::to_string(k)},
                                             {"offset", std::to_string(offset)}}, {}};
            if (!mode.empty()) r.params["mode"] = mode;
            if (!filter.empty()) r.params["filter"] = filter;
            return print_response(api::handle(engine.get(), r, false));
        }
        if (*qa_cmd) {
            json body{{"mode", mode}, {"query", query}};
            if (!filter.empty()) {
                try {
                    body["filter"] = json::parse(filter);
                } catch (const json::exception&) {
                    std::cerr << "error: --filter is not valid JSON\n";
                    return kExitUsage;
                }
            }
            if (!topics.empty()) body["topic_ids"] = topics;
            const auto engine = open_engine(workdir);
            return print_response(api::handle(engine.get(), {"POST", "/qa", {}, body.dump()}, false));
        }
    } catch (const MissingArtifact& m) {
        std::cerr << "error: missing " << m.what << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what();
        if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
        std::cerr << "\n";
        return kExitEngine;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEngine;
    }
    return kExitUsage;
}
