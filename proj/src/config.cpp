#include "corpusmap/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "corpusmap/error.hpp"

namespace corpusmap {

namespace {

void check(bool ok, const char* what)
{
    if (!ok) fail(ErrorCode::invalid_argument, std::string("config: ") + what);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out)
{
    if (auto it = j.find(key); it != j.end()) {
        it->get_to(out);
    }
}

void read_endpoint(const nlohmann::json& j, const char* key, RemoteEndpoint& ep)
{
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_object()) fail(ErrorCode::invalid_argument, std::string("config: ") + key + " must be an object");
    read(*it, "url", ep.url);
    read(*it, "model", ep.model);
    read(*it, "timeout_seconds", ep.timeout_seconds);
}

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys{
        "embedding_dim", "interval_days", "bm25_k1", "bm25_b", "min_cluster_size", "min_samples",
        "reduce_dim", "merge_threshold", "hierarchy_thresholds", "top_n_keywords", "top_k_sentences",
        "rng_seed", "reassign_outliers", "layout_refine", "refine_iterations", "refine_neighbors",
        "embedder", "embed_batch_size", "embed_max_in_flight", "llm", "llm_max_tokens", "bind_address",
        "map_point_cap", "semantic_filter_k", "cors_origin", "max_concurrent_requests", "production_mode"};
    return keys;
}

}  // namespace

void EngineConfig::validate() const
{
    check(embedding_dim >= reduce_dim && reduce_dim >= 2, "requires embedding_dim >= reduce_dim >= 2");
    check(interval_days >= 1, "interval_days must be positive");
    check(bm25_k1 >= 0.0, "bm25_k1 must be non-negative");
    check(bm25_b >= 0.0 && bm25_b <= 1.0, "bm25_b must lie in [0, 1]");
    check(min_cluster_size >= 2, "min_cluster_size must be at least 2");
    check(min_samples >= 1, "min_samples must be at least 1");
    check(merge_threshold > 0.0 && merge_threshold <= 1.0, "merge_threshold must lie in (0, 1]");
    for (std::size_t i = 0; i < hierarchy_thresholds.size(); ++i) {
        const double t = hierarchy_thresholds[i];
        check(t >= -1.0 && t <= 1.0, "hierarchy thresholds must lie in [-1, 1]");
        check(i == 0 || t < hierarchy_thresholds[i - 1], "hierarchy thresholds must be strictly descending");
    }
    check(top_n_keywords >= 1, "top_n_keywords must be at least 1");
    check(top_k_sentences >= 1, "top_k_sentences must be at least 1");
    check(refine_iterations >= 0 && refine_neighbors >= 1, "refinement settings out of range");
    check(embed_batch_size >= 1 && embed_max_in_flight >= 1, "embedder batching settings out of range");
    check(map_point_cap >= 1, "map_point_cap must be positive");
    check(semantic_filter_k >= 1, "semantic_filter_k must be positive");
    check(max_concurrent_requests >= 1, "max_concurrent_requests must be positive");
}

void to_json(nlohmann::json& j, const EngineConfig& c)
{
    auto endpoint = [](const RemoteEndpoint& ep) {
        return nlohmann::json{{"url", ep.url}, {"model", ep.model}, {"timeout_seconds", ep.timeout_seconds}};
    };
    j = nlohmann::json{
        {"embedding_dim", c.embedding_dim},
        {"interval_days", c.interval_days},
        {"bm25_k1", c.bm25_k1},
        {"bm25_b", c.bm25_b},
        {"min_cluster_size", c.min_cluster_size},
        {"min_samples", c.min_samples},
        {"reduce_dim", c.reduce_dim},
        {"merge_threshold", c.merge_threshold},
        {"hierarchy_thresholds", c.hierarchy_thresholds},
        {"top_n_keywords", c.top_n_keywords},
        {"top_k_sentences", c.top_k_sentences},
        {"rng_seed", c.rng_seed},
        {"reassign_outliers", c.reassign_outliers},
        {"layout_refine", c.layout_refine},
        {"refine_iterations", c.refine_iterations},
        {"refine_neighbors", c.refine_neighbors},
        {"embedder", endpoint(c.embedder)},
        {"embed_batch_size", c.embed_batch_size},
        {"embed_max_in_flight", c.embed_max_in_flight},
        {"llm", endpoint(c.llm)},
        {"llm_max_tokens", c.llm_max_tokens},
        {"bind_address", c.bind_address},
        {"map_point_cap", c.map_point_cap},
        {"semantic_filter_k", c.semantic_filter_k},
        {"cors_origin", c.cors_origin},
        {"max_concurrent_requests", c.max_concurrent_requests},
        {"production_mode", c.production_mode},
    };
}

void from_json(const nlohmann::json& j, EngineConfig& c)
{
    if (!j.is_object()) fail(ErrorCode::invalid_argument, "config: expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known_keys().contains(key)) fail(ErrorCode::invalid_argument, "config: unknown key '" + key + "'");
    }
    try {
        read(j, "embedding_dim", c.embedding_dim);
        read(j, "interval_days", c.interval_days);
        read(j, "bm25_k1", c.bm25_k1);
        read(j, "bm25_b", c.bm25_b);
        read(j, "min_cluster_size", c.min_cluster_size);
        read(j, "min_samples", c.min_samples);
        read(j, "reduce_dim", c.reduce_dim);
        read(j, "merge_threshold", c.merge_threshold);
        read(j, "hierarchy_thresholds", c.hierarchy_thresholds);
        read(j, "top_n_keywords", c.top_n_keywords);
        read(j, "top_k_sentences", c.top_k_sentences);
        read(j, "rng_seed", c.rng_seed);
        read(j, "reassign_outliers", c.reassign_outliers);
        read(j, "layout_refine", c.layout_refine);
        read(j, "refine_iterations", c.refine_iterations);
        read(j, "refine_neighbors", c.refine_neighbors);
        read_endpoint(j, "embedder", c.embedder);
        read(j, "embed_batch_size", c.embed_batch_size);
        read(j, "embed_max_in_flight", c.embed_max_in_flight);
        read_endpoint(j, "llm", c.llm);
        read(j, "llm_max_tokens", c.llm_max_tokens);
        read(j, "bind_address", c.bind_address);
        read(j, "map_point_cap", c.map_point_cap);
        read(j, "semantic_filter_k", c.semantic_filter_k);
        read(j, "cors_origin", c.cors_origin);
        read(j, "max_concurrent_requests", c.max_concurrent_requests);
        read(j, "production_mode", c.production_mode);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("config: ") + e.what());
    }
}

EngineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open config file", path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::invalid_argument, std::string("config: ") + e.what(), path.string());
    }
    EngineConfig c = j.get<EngineConfig>();
    c.validate();
    return c;
}

void apply_env_overrides(EngineConfig& c)
{
    auto env = [](const char* name, std::string& out) {
        if (const char* v = std::getenv(name); v != nullptr && *v != '\0') out = v;
    };
    env("CORPUSMAP_BIND", c.bind_address);
    env("CORPUSMAP_CORS_ORIGIN", c.cors_origin);
    env("CORPUSMAP_EMBED_URL", c.embedder.url);
    env("CORPUSMAP_EMBED_MODEL", c.embedder.model);
    env("CORPUSMAP_LLM_URL", c.llm.url);
    env("CORPUSMAP_LLM_MODEL", c.llm.model);
}

}  // namespace corpusmap
