#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "corpusmap/config.hpp"
#include "corpusmap/embed.hpp"
#include "corpusmap/ingest.hpp"
#include "corpusmap/llm.hpp"
#include "corpusmap/snapshot.hpp"

namespace corpusmap::pipeline {

using Progress = std::function<void(std::string_view)>;

/// Embeds documents and sentences, clusters every time interval, merges the
/// interval models, builds the hierarchy and the 2D layout, and indexes the
/// result. The snapshot id is left empty until the snapshot is saved.
index::Snapshot build_snapshot(std::vector<Document> docs, ingest::CorpusStats stats, const EngineConfig& cfg,
                               const embed::EmbeddingProvider& embedder, const llm::LlmProvider& llm,
                               const Progress& progress = {});

}  // namespace corpusmap::pipeline
