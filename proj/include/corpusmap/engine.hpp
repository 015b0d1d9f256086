#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpusmap/embed.hpp"
#include "corpusmap/filter.hpp"
#include "corpusmap/llm.hpp"
#include "corpusmap/qa.hpp"
#include "corpusmap/search_hit.hpp"
#include "corpusmap/snapshot.hpp"

namespace corpusmap::engine {

struct SearchRequest {
    std::string q;
    QueryMode mode = QueryMode::lexical;
    index::Field field = index::Field::body;
    Filter filter;
    std::size_t k = 10;
    std::size_t offset = 0;
};

struct MapPoint {
    std::string doc_id;
    double x = 0.0;
    double y = 0.0;
    std::string topic_id;  // "" when unassigned
};

struct MapView {
    std::vector<MapPoint> points;
    std::size_t total = 0;  // admitted documents before the cap
    bool truncated = false;
};

struct QaRequest {
    qa::Mode mode = qa::Mode::document;
    std::string query;
    Filter filter;
    std::optional<std::vector<std::string>> topic_ids;
};

struct Health {
    std::string snapshot_id;
    std::size_t doc_count = 0;
    std::size_t sentence_count = 0;
    std::size_t topic_count = 0;
    std::size_t interval_count = 0;
};

/// Read-only query surface over one loaded snapshot. Every operation is a
/// pure function of the snapshot and the request when the stub LLM is used.
class Engine {
public:
    Engine(index::Snapshot snapshot, std::unique_ptr<embed::EmbeddingProvider> embedder,
           std::unique_ptr<llm::LlmProvider> llm);

    /// Loads a snapshot directory and creates providers from its config with
    /// environment overrides applied.
    static std::shared_ptr<const Engine> open(const std::filesystem::path& snapshot_dir);

    const index::Snapshot& snapshot() const noexcept { return snap_; }
    const Document* document(std::string_view doc_id) const;
    const Topic* topic(std::string_view topic_id) const;

    /// Documents admitted by every conjunct of the filter, including the
    /// free-text query: lexical admits documents sharing a body term with it;
    /// semantic admits the semantic_filter_k nearest documents.
    index::DocMask resolve(const Filter& filter) const;

    std::vector<index::SearchHit> search(const SearchRequest& req) const;
    MapView map(const Filter& filter) const;
    std::vector<index::HistogramBin> timeline(const Filter& filter, index::Bucket bucket) const;
    qa::Answer ask(const QaRequest& req) const;
    Health health() const;

private:
    Vector embed_query(const std::string& text) const;

    index::Snapshot snap_;
    std::unique_ptr<embed::EmbeddingProvider> embedder_;
    std::unique_ptr<llm::LlmProvider> llm_;
    index::TopicTree tree_;
    std::unordered_map<std::string, std::size_t> doc_pos_;
    std::unordered_map<std::string, std::size_t> topic_pos_;
};

/// Holder for the engine being served. Readers keep the engine they obtained
/// alive until they finish; replace() swaps atomically.
class EngineSlot {
public:
    std::shared_ptr<const Engine> get() const;
    void replace(std::shared_ptr<const Engine> next);

private:
    mutable std::mutex mu_;
    std::shared_ptr<const Engine> current_;
};

}  // namespace corpusmap::engine
