#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <utility>

#include "corpusmap/engine.hpp"

namespace corpusmap::server {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string cors_origin;
    int threads = 8;
    bool production_mode = false;
    std::ostream* log = nullptr;  // one line per request when set
};

/// Splits "host:port"; throws invalid_argument when malformed.
std::pair<std::string, int> parse_bind(const std::string& address);

/// HTTP front end over an engine slot. Requests arriving while the slot is
/// empty get 503.
class Server {
public:
    Server(engine::EngineSlot& slot, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the listening socket and returns the bound port. Throws io on failure.
    int bind();
    /// Serves until stop(); call after bind().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace corpusmap::server
