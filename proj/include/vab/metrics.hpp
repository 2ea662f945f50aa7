#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "vab/error.hpp"
#include "vab/tensor.hpp"

// Evaluation metrics: clustering accuracy under the optimal cluster-to-label
// mapping (Kuhn-Munkres), peak signal-to-noise ratio, and bits per pixel.

namespace vab {

/// Cluster-vs-label co-occurrence counts.
struct ContingencyTable {
    std::size_t k_pred = 0;
    std::size_t k_true = 0;
    std::vector<std::int64_t> counts; // k_pred x k_true, row-major
    std::int64_t total = 0;

    std::int64_t& at(std::size_t p, std::size_t t) { return counts[p * k_true + t]; }
    std::int64_t at(std::size_t p, std::size_t t) const { return counts[p * k_true + t]; }
};

/// Result of an assignment solve: row -> column, injective.
struct Assignment {
    std::vector<int> mapping;
    double total_cost = 0.0;
};

/// Minimum-cost perfect matching via shortest augmenting paths with
/// potentials, O(n^3). Rectangular inputs are padded with zero-cost dummy
/// rows/columns; dummy assignments surface as columns >= the true width.
inline Assignment hungarian(const Tensor& cost) {
    if (cost.ndim() != 2)
        throw InputError("hungarian: expected a 2-D cost matrix, got " + cost.shape_str());
    for (double v : cost.data)
        if (!std::isfinite(v)) throw InputError("hungarian: non-finite cost entry");

    const std::size_t r = cost.rows(), c = cost.cols();
    const std::size_t n = std::max(r, c);
    Assignment result;
    if (n == 0) return result;

    auto at = [&](std::size_t i, std::size_t j) -> double {
        return (i < r && j < c) ? cost(i, j) : 0.0;
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            std::size_t i0 = match[j0], j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j)
                if (!used[j]) {
                    double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }

    result.mapping.assign(r, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        std::size_t i = match[j];
        if (i >= 1 && i <= r) result.mapping[i - 1] = static_cast<int>(j - 1);
    }
    for (std::size_t i = 0; i < r; ++i)
        if (result.mapping[i] >= 0 && static_cast<std::size_t>(result.mapping[i]) < c)
            result.total_cost += cost(i, static_cast<std::size_t>(result.mapping[i]));
    return result;
}

inline ContingencyTable build_contingency(const std::vector<int>& pred,
                                          const std::vector<int>& truth, std::size_t k_pred,
                                          std::size_t k_true) {
    if (pred.size() != truth.size())
        throw InputError("contingency: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " labels");
    ContingencyTable table;
    table.k_pred = k_pred;
    table.k_true = k_true;
    table.counts.assign(k_pred * k_true, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || static_cast<std::size_t>(pred[i]) >= k_pred)
            throw InputError("contingency: prediction id " + std::to_string(pred[i]) +
                             " out of range [0," + std::to_string(k_pred) + ")");
        if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= k_true)
            throw InputError("contingency: label id " + std::to_string(truth[i]) +
                             " out of range [0," + std::to_string(k_true) + ")");
        ++table.at(static_cast<std::size_t>(pred[i]), static_cast<std::size_t>(truth[i]));
        ++table.total;
    }
    return table;
}

/// Fraction of samples matched under the best injective mapping from
/// predicted cluster ids to label ids (maximize matches = minimize negated
/// contingency counts).
inline double clustering_acc(const std::vector<int>& pred, const std::vector<int>& truth,
                             std::size_t k_pred, std::size_t k_true) {
    ContingencyTable table = build_contingency(pred, truth, k_pred, k_true);
    if (table.total == 0) throw InputError("clustering_acc: no samples");
    Tensor neg({k_pred, k_true});
    for (std::size_t p = 0; p < k_pred; ++p)
        for (std::size_t t = 0; t < k_true; ++t)
            neg(p, t) = -static_cast<double>(table.at(p, t));
    Assignment best = hungarian(neg);
    std::int64_t matched = 0;
    for (std::size_t p = 0; p < k_pred; ++p)
        if (best.mapping[p] >= 0 && static_cast<std::size_t>(best.mapping[p]) < k_true)
            matched += table.at(p, static_cast<std::size_t>(best.mapping[p]));
    return static_cast<double>(matched) / static_cast<double>(table.total);
}

inline double clustering_acc(const std::vector<int>& pred, const std::vector<int>& truth,
                             std::size_t k) {
    return clustering_acc(pred, truth, k, k);
}

/// 10*log10(MAX^2/MSE) with MAX = 1. Identical inputs give +infinity,
/// reported downstream as "inf".
inline double psnr(const Tensor& original, const Tensor& reconstructed) {
    if (!original.same_shape(reconstructed))
        throw InputError("psnr: shapes " + original.shape_str() + " and " +
                         reconstructed.shape_str() + " differ");
    if (original.numel() == 0) throw InputError("psnr: empty input");
    double mse = 0.0;
    for (std::size_t i = 0; i < original.numel(); ++i) {
        double d = original.data[i] - reconstructed.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(original.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

/// Latent bits per stored pixel.
inline double bpp(std::size_t dim_z, std::size_t pixels_per_image) {
    return static_cast<double>(dim_z) / static_cast<double>(pixels_per_image);
}

} // namespace vab
