#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "corpusmap/vector_math.hpp"

namespace corpusmap::topics {

/// Distance from each point to its min_samples-th nearest neighbour, the point
/// itself excluded. Throws invalid_argument unless points.size() > min_samples.
std::vector<double> core_distances(const std::vector<Vector>& points, int min_samples);

/// d_mreach(a, b) = max(core(a), core(b), |a - b|), evaluated on demand.
class MutualReachability {
public:
    MutualReachability(const std::vector<Vector>& points, std::vector<double> cores);

    std::size_t size() const noexcept { return points_->size(); }
    double operator()(std::size_t a, std::size_t b) const;
    const std::vector<double>& cores() const noexcept { return cores_; }

private:
    const std::vector<Vector>* points_;
    std::vector<double> cores_;
};

struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

/// Prim's algorithm over the complete mutual-reachability graph; n - 1 edges in
/// the order they were added.
std::vector<Edge> minimum_spanning_tree(const MutualReachability& mr);

/// One agglomeration step. Nodes 0..n-1 are points; step i creates node n + i.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double distance = 0.0;
    std::size_t size = 0;
};

/// Single-linkage dendrogram from MST edges sorted by ascending weight
/// (stable, so equal weights keep tree order).
std::vector<Merge> single_linkage(std::size_t n_points, std::vector<Edge> mst);

/// A cluster of the condensed tree. lambda = 1 / distance.
struct CondensedNode {
    std::size_t node_id = 0;
    std::optional<std::size_t> parent;
    double lambda_birth = 0.0;
    double lambda_death = 0.0;
    std::size_t child_count = 0;  // points present at birth
    double stability = 0.0;       // sum over departing points of (lambda_point - lambda_birth)
    std::vector<std::size_t> children;
};

struct CondensedTree {
    std::vector<CondensedNode> clusters;  // clusters[0] is the root; children have larger ids
    std::vector<std::size_t> point_cluster;  // cluster each point finally falls out of
    std::vector<double> point_lambda;        // lambda at which it does
};

/// Walks the dendrogram from the root. A split where both sides hold at least
/// min_cluster_size points creates two child clusters; otherwise the smaller
/// sides' points fall out of the current cluster.
CondensedTree condense(const std::vector<Merge>& merges, std::size_t n_points, int min_cluster_size);

/// Excess-of-mass selection: a cluster is kept over its descendants iff its
/// stability is at least the best total achievable below it. The root is
/// selected only when it has no children. Returns the selected cluster ids,
/// ascending; they are pairwise non-nested.
std::vector<std::size_t> select_clusters(const CondensedTree& tree);

/// Label per point: index into `selected`, or -1 for outliers.
std::vector<int> label_points(const CondensedTree& tree, const std::vector<std::size_t>& selected);

struct DensityClustering {
    std::vector<int> labels;  // -1 = outlier; clusters numbered by first member
    std::size_t cluster_count = 0;
    CondensedTree tree;
};

/// Full pipeline: core distances, mutual reachability, MST, dendrogram,
/// condensed tree, excess-of-mass selection.
DensityClustering density_cluster(const std::vector<Vector>& points, int min_cluster_size, int min_samples);

}  // namespace corpusmap::topics
