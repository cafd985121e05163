#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "litesem/error.hpp"
#include "litesem/vector_math.hpp"

namespace litesem {

/// Dispersion score: mean cosine between each vector and the component-wise mean.
/// Returns 0 when the mean vanishes (e.g. antipodal pairs).
inline double s_mean(std::span<const Embedding> vectors) {
    if (vectors.empty()) {
        throw Error(ErrorCode::EmptyInput, "s_mean of an empty set");
    }
    const std::size_t dim = vectors.front().size();
    const auto centroid = mean_of(vectors, dim);
    if (l2_norm(std::span<const double>(centroid)) <= 1e-12) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& v : vectors) {
        total += cosine(std::span<const double>(centroid), std::span<const float>(v));
    }
    return std::clamp(total / static_cast<double>(vectors.size()), -1.0, 1.0);
}

/// Nearest-rank percentile: the element at index ceil(n/100 * |values|) - 1 after sorting.
inline double nth_percentile(std::vector<double> values, double n) {
    if (values.empty()) {
        throw Error(ErrorCode::EmptyInput, "percentile of an empty set");
    }
    if (!(n > 0.0 && n < 100.0)) {
        throw Error(ErrorCode::InvalidConfig, "percentile must lie in (0, 100)");
    }
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(n * static_cast<double>(values.size()) / 100.0);
    const auto idx = static_cast<std::size_t>(std::max(rank, 1.0)) - 1;
    return values[std::min(idx, values.size() - 1)];
}

} // namespace litesem
