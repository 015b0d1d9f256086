#pragma once

// Seeded data generators and test scaffolding.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "corpusmap/types.hpp"

namespace fixture {

struct Blobs {
    std::vector<corpusmap::Vector> points;
    std::vector<int> truth;
};

/// k isotropic Gaussian blobs of `per` points in `dim` dimensions with
/// standard deviation sigma. Centers sit on scaled coordinate axes so every
/// pair of centers is `separation` sigmas apart.
Blobs gaussian_blobs(std::size_t k, std::size_t per, std::size_t dim, double separation, double sigma,
                     std::uint64_t seed);

/// Documents carrying the given vectors as embeddings, dated first_day + offset.
std::vector<corpusmap::Document> docs_with_embeddings(const std::vector<corpusmap::Vector>& vectors,
                                                      corpusmap::Date day, const std::string& id_prefix);

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng);

/// Removes the directory on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Local HTTP server running on a background thread for protocol tests.
class MockServer {
public:
    explicit MockServer(std::function<void(httplib::Server&)> routes);
    ~MockServer();
    int port() const { return port_; }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace fixture
