#include "corpusmap/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "corpusmap/error.hpp"

namespace corpusmap::atlas {

namespace {

template <typename T>
Vector apply_impl(const ProjectionTransform& t, std::span<const T> v)
{
    if (v.size() != t.mean.size()) fail(ErrorCode::invalid_argument, "project_apply: dimension mismatch");
    Vector out(t.basis.size(), 0.0);
    for (std::size_t r = 0; r < t.basis.size(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) s += (static_cast<double>(v[j]) - t.mean[j]) * t.basis[r][j];
        out[r] = s;
    }
    return out;
}

void fix_sign(Vector& dir)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < dir.size(); ++j) {
        if (std::abs(dir[j]) > std::abs(dir[best])) best = j;
    }
    if (dir[best] < 0.0) {
        for (double& x : dir) x = -x;
    }
}

}  // namespace

Vector ProjectionTransform::apply(std::span<const double> v) const { return apply_impl(*this, v); }
Vector ProjectionTransform::apply(std::span<const float> v) const { return apply_impl(*this, v); }

ProjectionTransform project_fit(const std::vector<Vector>& vectors, int target_dim)
{
    if (target_dim < 1) fail(ErrorCode::invalid_argument, "project_fit: target_dim must be positive");
    if (vectors.size() < static_cast<std::size_t>(target_dim)) {
        fail(ErrorCode::invalid_argument, "project_fit: fewer vectors than target dimensions");
    }
    const std::size_t n = vectors.size();
    const std::size_t d = vectors.front().size();
    if (static_cast<std::size_t>(target_dim) > d) fail(ErrorCode::invalid_argument, "project_fit: target_dim exceeds input dimension");

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (vectors[i].size() != d) fail(ErrorCode::invalid_argument, "project_fit: inconsistent dimensions");
        for (std::size_t j = 0; j < d; ++j) x(i, j) = vectors[i][j];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    // Eigen-decompose whichever of X^T X (d x d) or X X^T (n x n) is smaller.
    const bool use_gram = n < d;
    const Eigen::MatrixXd m = use_gram ? Eigen::MatrixXd(x * x.transpose()) : Eigen::MatrixXd(x.transpose() * x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) fail(ErrorCode::invalid_argument, "project_fit: eigendecomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vecs = solver.eigenvectors();
    const double top = std::max(values(values.size() - 1), 0.0);
    const double tol = std::max(top, 1.0) * 1e-12;

    ProjectionTransform t;
    t.mean.assign(mean.data(), mean.data() + d);
    for (int r = 0; r < target_dim; ++r) {
        const Eigen::Index col = values.size() - 1 - r;
        Vector dir(d, 0.0);
        if (col >= 0 && values(col) > tol) {
            Eigen::VectorXd v = use_gram ? Eigen::VectorXd(x.transpose() * vecs.col(col)) : Eigen::VectorXd(vecs.col(col));
            const double norm = v.norm();
            if (norm > 0.0) {
                for (std::size_t j = 0; j < d; ++j) dir[j] = v(static_cast<Eigen::Index>(j)) / norm;
                fix_sign(dir);
                t.basis.push_back(std::move(dir));
                continue;
            }
        }
        ++t.padded_dims;
        t.basis.push_back(std::move(dir));
    }
    return t;
}

std::vector<Vector> refine_layout(std::vector<Vector> coords, const std::vector<Vector>& original, RefineOptions opts)
{
    const std::size_t n = coords.size();
    if (original.size() != n) fail(ErrorCode::invalid_argument, "refine_layout: size mismatch");
    if (n < 3 || opts.iterations <= 0) return coords;
    const std::size_t dim = coords.front().size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(opts.neighbors), n - 1);

    // k-NN graph, brute force.
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(n * k);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dist[j] = {j == i ? std::numeric_limits<double>::infinity()
                              : squared_distance(std::span<const double>(original[i]), std::span<const double>(original[j])),
                       j};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t m = 0; m < k; ++m) edges.emplace_back(i, dist[m].second);
    }

    // Rescale the starting layout into a box of half-width 10.
    double extent = 0.0;
    for (const auto& c : coords)
        for (double v : c) extent = std::max(extent, std::abs(v));
    if (extent > 0.0) {
        for (auto& c : coords)
            for (double& v : c) v *= 10.0 / extent;
    }

    // Curve parameters of the low-dimensional similarity kernel 1 / (1 + a d^(2b)).
    const double a = 1.577;
    const double b = 0.895;
    const int negative_samples = 5;
    const double clip = 4.0;
    std::mt19937_64 rng(opts.seed);
    auto clamp = [clip](double g) { return std::max(-clip, std::min(clip, g)); };

    for (int epoch = 0; epoch < opts.iterations; ++epoch) {
        const double alpha = 1.0 - static_cast<double>(epoch) / opts.iterations;
        for (const auto& [i, j] : edges) {
            double d2 = squared_distance(std::span<const double>(coords[i]), std::span<const double>(coords[j]));
            if (d2 > 0.0) {
                const double coef = (-2.0 * a * b * std::pow(d2, b - 1.0)) / (a * std::pow(d2, b) + 1.0);
                for (std::size_t c = 0; c < dim; ++c) {
                    const double g = clamp(coef * (coords[i][c] - coords[j][c])) * alpha;
                    coords[i][c] += g;
                    coords[j][c] -= g;
                }
            }
            for (int s = 0; s < negative_samples; ++s) {
                const std::size_t m = static_cast<std::size_t>(rng() % n);
                if (m == i) continue;
                d2 = squared_distance(std::span<const double>(coords[i]), std::span<const double>(coords[m]));
                const double coef = d2 > 0.0 ? (2.0 * b) / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0)) : 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double g = coef > 0.0 ? clamp(coef * (coords[i][c] - coords[m][c])) : clip;
                    coords[i][c] += g * alpha;
                }
            }
        }
    }
    return coords;
}

}  // namespace corpusmap::atlas
