#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace litesem {

/// Embeddings are stored as 32-bit floats; all arithmetic on them runs in double.
using Embedding = std::vector<float>;

inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double acc = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

inline double l2_norm(std::span<const float> v) noexcept { return std::sqrt(dot(v, v)); }
inline double l2_norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

/// Cosine similarity clamped to [-1, 1]; zero when either side is the zero vector.
inline double cosine(std::span<const float> a, std::span<const float> b) noexcept {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double cosine(std::span<const double> a, std::span<const float> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        acc += a[i] * static_cast<double>(b[i]);
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return std::clamp(acc / (na * nb), -1.0, 1.0);
}

/// Component-wise mean, accumulated in double.
template <typename Range>
std::vector<double> mean_of(const Range& vectors, std::size_t dim) {
    std::vector<double> mean(dim, 0.0);
    std::size_t n = 0;
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < dim; ++i) {
            mean[i] += static_cast<double>(v[i]);
        }
        ++n;
    }
    if (n > 0) {
        for (double& x : mean) {
            x /= static_cast<double>(n);
        }
    }
    return mean;
}

/// Unit-normalizes into float storage. A zero vector stays zero; callers check for that.
inline Embedding normalized(std::span<const double> v) {
    const double n = l2_norm(v);
    Embedding out(v.size(), 0.0F);
    if (n > 0.0) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = static_cast<float>(v[i] / n);
        }
    }
    return out;
}

inline Embedding normalized(std::span<const float> v) {
    std::vector<double> tmp(v.begin(), v.end());
    return normalized(std::span<const double>(tmp));
}

} // namespace litesem
