#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <unistd.h>

#include "corpusmap/vector_math.hpp"

namespace fixture {

Blobs gaussian_blobs(std::size_t k, std::size_t per, std::size_t dim, double separation, double sigma,
                     std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    const double axis = separation * sigma / std::sqrt(2.0);
    Blobs b;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per; ++i) {
            corpusmap::Vector p(dim);
            for (auto& x : p) x = noise(rng);
            p[c % dim] += axis;
            b.points.push_back(std::move(p));
            b.truth.push_back(static_cast<int>(c));
        }
    }
    return b;
}

std::vector<corpusmap::Document> docs_with_embeddings(const std::vector<corpusmap::Vector>& vectors,
                                                      corpusmap::Date day, const std::string& id_prefix)
{
    std::vector<corpusmap::Document> docs;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        corpusmap::Document d;
        d.doc_id = id_prefix + std::to_string(i);
        d.title = "title " + std::to_string(i);
        d.body = "body " + std::to_string(i);
        d.pub_date = day;
        d.embedding = corpusmap::to_embedding(vectors[i]);
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    double s = 0;
    for (auto& x : v) {
        x = n(rng);
        s += x * x;
    }
    for (auto& x : v) x /= std::sqrt(s);
    return v;
}

TempDir::TempDir()
{
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("corpusmap-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

MockServer::MockServer(std::function<void(httplib::Server&)> routes)
{
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
}

MockServer::~MockServer()
{
    server_.stop();
    thread_.join();
}

}  // namespace fixture
