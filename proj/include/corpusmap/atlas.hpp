#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "corpusmap/llm.hpp"
#include "corpusmap/projection.hpp"
#include "corpusmap/topics.hpp"
#include "corpusmap/types.hpp"

namespace corpusmap::atlas {

struct MergeDecision {
    std::string interval_topic_id;
    std::string merged_topic_id;
    double similarity = 0.0;  // best pool similarity seen; 0 when the pool was empty
    bool absorbed = false;

    bool operator==(const MergeDecision&) const = default;
};

/// The unified topic landscape. topics[i] is backed by members[i], the corpus
/// positions of every document beneath it (all descendants for parents).
struct MergedAtlas {
    std::vector<Topic> topics;
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::string> doc_assignments;  // corpus-aligned leaf topic id, "" when unassigned
    std::vector<Point2> doc_coords;            // corpus-aligned
    std::vector<MergeDecision> merge_log;

    std::size_t leaf_count() const;
    const Topic* find(std::string_view topic_id) const;
};

/// Shared inputs of the merge, hierarchy and layout steps.
struct AtlasContext {
    const std::vector<Document>& docs;
    const llm::LlmProvider& llm;
    std::size_t top_n_keywords = 10;
};

/// Chronological greedy merge. Each incoming interval topic joins the pool
/// topic with the highest centroid cosine (earliest on ties) when that cosine
/// is at least merge_threshold, otherwise it starts a new pool topic. Absorbing
/// recomputes the centroid from all member embeddings and unions the source
/// intervals. Keywords and labels of the final pool are computed by class
/// tf-idf over the merged member sets. Outliers of every interval are gathered
/// into the reserved outlier topic.
MergedAtlas merge_models(const std::vector<topics::IntervalModel>& models, double merge_threshold,
                         const AtlasContext& ctx);

/// Adds models to an existing leaf-level atlas. An empty model list leaves
/// the atlas untouched; otherwise any hierarchy above the leaves is dropped.
void merge_into(MergedAtlas& atlas, const std::vector<topics::IntervalModel>& models, double merge_threshold,
                const AtlasContext& ctx);

/// Adds one parent level per threshold. At each level, nodes whose centroid
/// cosine reaches the threshold are linked; each connected component becomes a
/// parent whose centroid is the normalized size-weighted mean of its
/// children. Singleton components are lifted unchanged. Thresholds must be
/// strictly descending and inside (0, 1).
void build_hierarchy(MergedAtlas& atlas, const std::vector<double>& thresholds, const AtlasContext& ctx);

struct LayoutOptions {
    bool refine = false;
    RefineOptions refine_options;
};

/// 2D coordinates: one projection fitted on all document embeddings, topic
/// coordinates at the mean of their member documents. Values are rounded to
/// 32-bit float precision, the precision they are persisted at.
void layout_atlas(MergedAtlas& atlas, const std::vector<Document>& docs, const LayoutOptions& opts);

}  // namespace corpusmap::atlas
