#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "corpusmap/error.hpp"

namespace corpusmap {

/// Dense real vector used for all arithmetic (centroids, projections, queries).
using Vector = std::vector<double>;

/// Storage form of an embedding. Snapshots persist embeddings as 32-bit floats,
/// so in-memory embeddings are kept at that precision to make save/load exact.
using Embedding = std::vector<float>;

template <std::floating_point A, std::floating_point B>
double dot(std::span<const A> a, std::span<const B> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

template <std::floating_point T>
double l2_norm(std::span<const T> v)
{
    return std::sqrt(dot(v, v));
}

template <std::floating_point T>
double squared_distance(std::span<const T> a, std::span<const T> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += diff * diff;
    }
    return s;
}

/// Cosine of the angle between a and b. Throws invalid_argument on dimension
/// mismatch or a zero vector. Clamped to [-1, 1].
template <std::floating_point A, std::floating_point B>
double cosine_similarity(std::span<const A> a, std::span<const B> b)
{
    if (a.size() != b.size()) {
        fail(ErrorCode::invalid_argument, "cosine_similarity: dimension mismatch");
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        fail(ErrorCode::invalid_argument, "cosine_similarity: zero vector");
    }
    const double c = dot(a, b) / (na * nb);
    return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline double cosine_similarity(const Vector& a, const Vector& b)
{
    return cosine_similarity(std::span<const double>(a), std::span<const double>(b));
}

/// Returns v scaled to unit L2 norm. Throws invalid_argument for a zero vector.
template <std::floating_point T>
Vector normalize(std::span<const T> v)
{
    const double n = l2_norm(v);
    if (n == 0.0 || !std::isfinite(n)) {
        fail(ErrorCode::invalid_argument, "normalize: zero or non-finite vector");
    }
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<double>(v[i]) / n;
    }
    return out;
}

inline Vector normalize(const Vector& v) { return normalize(std::span<const double>(v)); }

inline Embedding to_embedding(const Vector& v)
{
    return Embedding(v.begin(), v.end());
}

inline Vector to_vector(std::span<const float> v)
{
    return Vector(v.begin(), v.end());
}

template <std::floating_point T>
bool all_finite(std::span<const T> v)
{
    for (T x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace corpusmap
