#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "corpusmap/atlas.hpp"
#include "corpusmap/config.hpp"
#include "corpusmap/ingest.hpp"
#include "corpusmap/lexical_index.hpp"
#include "corpusmap/topics.hpp"
#include "corpusmap/vector_index.hpp"

namespace corpusmap::index {

inline constexpr int kSnapshotVersion = 1;

/// Everything the service needs, produced by one build. Documents carry
/// topic_id and coords; their embeddings live in doc_vectors.
struct Snapshot {
    EngineConfig config;
    ingest::CorpusStats stats;
    std::vector<Document> docs;
    std::vector<SentenceChunk> sentences;  // text only; embeddings live in sentence_vectors
    LexicalIndex lexical;
    VectorIndex doc_vectors;
    VectorIndex sentence_vectors;
    atlas::MergedAtlas atlas;
    std::vector<topics::IntervalModel> intervals;
    std::string snapshot_id;  // set by save/load
};

/// Writes the snapshot directory: manifest.json (format version, config echo,
/// per-file byte counts and FNV-1a checksums) plus one file per structure.
/// Vectors and coordinates are little-endian float32. The directory is
/// assembled beside the target and renamed into place. Returns the snapshot id.
std::string save_snapshot(const Snapshot& snap, const std::filesystem::path& dir);

/// Throws corrupt_snapshot when the manifest or any listed file is missing,
/// truncated or fails its checksum; incompatible_snapshot on a version mismatch.
Snapshot load_snapshot(const std::filesystem::path& dir);

/// Reads only the manifest's snapshot id (no verification).
std::string read_snapshot_id(const std::filesystem::path& dir);

/// Reads only the manifest's config echo (no verification).
EngineConfig read_snapshot_config(const std::filesystem::path& dir);

}  // namespace corpusmap::index
