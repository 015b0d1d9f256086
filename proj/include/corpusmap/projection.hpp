#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "corpusmap/vector_math.hpp"

namespace corpusmap::atlas {

/// Linear projection fitted by principal component analysis. Each basis row is
/// a principal direction whose largest-magnitude component is positive.
struct ProjectionTransform {
    Vector mean;
    std::vector<Vector> basis;  // target_dim rows of length d
    int padded_dims = 0;        // trailing zero rows for missing directions

    int input_dim() const { return static_cast<int>(mean.size()); }
    int output_dim() const { return static_cast<int>(basis.size()); }

    Vector apply(std::span<const double> v) const;
    Vector apply(std::span<const float> v) const;

    bool operator==(const ProjectionTransform&) const = default;
};

/// Throws invalid_argument if there are fewer vectors than target_dim, the
/// vectors disagree in dimension, or target_dim exceeds it.
ProjectionTransform project_fit(const std::vector<Vector>& vectors, int target_dim);

struct RefineOptions {
    int iterations = 200;
    int neighbors = 15;
    std::uint64_t seed = 42;
};

/// Neighbor-graph refinement of low-dimensional coordinates: seeded
/// attraction along the k-NN graph of the original vectors, repulsion from
/// random samples. Single-threaded and reproducible for a given seed.
std::vector<Vector> refine_layout(std::vector<Vector> coords, const std::vector<Vector>& original, RefineOptions opts);

}  // namespace corpusmap::atlas
