#include "corpusmap/server.hpp"

#include <charconv>
#include <chrono>
#include <mutex>

#include <httplib.h>

#include "corpusmap/api.hpp"
#include "corpusmap/error.hpp"

namespace corpusmap::server {

std::pair<std::string, int> parse_bind(const std::string& address)
{
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0) fail(ErrorCode::invalid_argument, "bind address must be host:port");
    int port = -1;
    const char* begin = address.data() + colon + 1;
    const char* end = address.data() + address.size();
    auto [ptr, ec] = std::from_chars(begin, end, port);
    if (ec != std::errc() || ptr != end || port < 0 || port > 65535) {
        fail(ErrorCode::invalid_argument, "bind address has an invalid port: " + address);
    }
    return {address.substr(0, colon), port};
}

struct Server::Impl {
    engine::EngineSlot& slot;
    ServerOptions options;
    httplib::Server http;
    std::mutex log_mu;

    Impl(engine::EngineSlot& s, ServerOptions o) : slot(s), options(std::move(o)) {}

    void respond(const httplib::Request& req, httplib::Response& res)
    {
        const auto start = std::chrono::steady_clock::now();
        api::Request r{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) r.params.emplace(k, v);
        const auto engine = slot.get();
        const api::Response out = api::handle(engine.get(), r, options.production_mode);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
        if (!options.cors_origin.empty()) res.set_header("Access-Control-Allow-Origin", options.cors_origin);
        log(req, out.status, start);
    }

    void log(const httplib::Request& req, int status, std::chrono::steady_clock::time_point start)
    {
        if (options.log == nullptr) return;
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        char latency[32];
        std::snprintf(latency, sizeof latency, "%.3f", ms);
        std::lock_guard lock(log_mu);
        *options.log << "{\"method\":\"" << req.method << "\",\"route\":\"" << req.path << "\",\"status\":" << status
                     << ",\"latency_ms\":" << latency << "}\n";
        options.log->flush();
    }
};

Server::Server(engine::EngineSlot& slot, ServerOptions options) : impl_(std::make_unique<Impl>(slot, std::move(options)))
{
    auto& http = impl_->http;
    const int threads = std::max(1, impl_->options.threads);
    http.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->respond(req, res); };
    // Every path goes through api::handle so unknown routes get the JSON error body.
    http.Get(".*", handler);
    http.Post(".*", handler);
    http.Put(".*", handler);
    http.Delete(".*", handler);
    http.Options(".*", [this](const httplib::Request&, httplib::Response& res) {
        if (!impl_->options.cors_origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", impl_->options.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
        res.status = 204;
    });
}

Server::~Server() { stop(); }

int Server::bind()
{
    auto& o = impl_->options;
    if (o.port == 0) {
        const int port = impl_->http.bind_to_any_port(o.host);
        if (port < 0) fail(ErrorCode::io, "cannot bind " + o.host);
        return port;
    }
    if (!impl_->http.bind_to_port(o.host, o.port)) {
        fail(ErrorCode::io, "cannot bind " + o.host + ":" + std::to_string(o.port));
    }
    return o.port;
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::stop()
{
    if (impl_) impl_->http.stop();
}

}  // namespace corpusmap::server
