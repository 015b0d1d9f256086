#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace corpusmap {

struct RemoteEndpoint {
    std::string url;  // empty = not configured
    std::string model;
    int timeout_seconds = 30;
    bool operator==(const RemoteEndpoint&) const = default;
};

/// Every tunable of the build and serve pipelines. Stages read from here and
/// never hard-code these values.
struct EngineConfig {
    int embedding_dim = 768;
    int interval_days = 15;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
    int min_cluster_size = 10;
    int min_samples = 5;
    int reduce_dim = 5;
    double merge_threshold = 0.80;
    std::vector<double> hierarchy_thresholds{0.80, 0.60};
    int top_n_keywords = 10;
    int top_k_sentences = 10;
    std::uint64_t rng_seed = 42;

    // Clustering / layout knobs.
    bool reassign_outliers = false;
    bool layout_refine = false;
    int refine_iterations = 200;
    int refine_neighbors = 15;

    // Embedding / LLM providers. Empty url selects the offline provider.
    RemoteEndpoint embedder;
    int embed_batch_size = 64;
    int embed_max_in_flight = 4;
    RemoteEndpoint llm;
    int llm_max_tokens = 512;

    // Serving.
    std::string bind_address = "127.0.0.1:8080";
    std::size_t map_point_cap = 50000;
    int semantic_filter_k = 200;
    std::string cors_origin;
    int max_concurrent_requests = 8;
    bool production_mode = false;

    /// Throws invalid_argument if any invariant is violated.
    void validate() const;

    bool operator==(const EngineConfig&) const = default;
};

void to_json(nlohmann::json& j, const EngineConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, EngineConfig& c);

EngineConfig load_config(const std::filesystem::path& path);

/// Applies CORPUSMAP_* environment overrides (bind address, provider endpoints, CORS).
void apply_env_overrides(EngineConfig& c);

}  // namespace corpusmap
