#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "vab/linalg.hpp"
#include "vab/sampling.hpp"
#include "vab/tensor.hpp"

// Classical clustering baselines applied directly to raw pixels: K-means
// (k-means++ seeding, Lloyd iterations) and a diagonal-covariance Gaussian
// mixture fitted by EM.

namespace vab {

struct KMeansModel {
    Tensor centroids; // K x d
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_trace; // measured at each assignment step
};

namespace detail {

/// Squared distances row-to-centroid via ||x||^2 - 2 x.c + ||c||^2.
/// The ||x||^2 part is dropped where only the argmin matters.
inline Tensor centroid_scores(const Tensor& data, const Tensor& centroids) {
    Tensor scores = linalg::matmul_nt(data, centroids); // N x K of dot products
    std::vector<double> cnorm(centroids.rows());
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < centroids.cols(); ++j)
            acc += centroids(c, j) * centroids(c, j);
        cnorm[c] = acc;
    }
    for (std::size_t i = 0; i < scores.rows(); ++i)
        for (std::size_t c = 0; c < scores.cols(); ++c)
            scores(i, c) = cnorm[c] - 2.0 * scores(i, c);
    return scores;
}

inline double row_sq_dist(const Tensor& data, std::size_t i, const Tensor& centroids,
                          std::size_t c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < data.cols(); ++j) {
        double diff = data(i, j) - centroids(c, j);
        acc += diff * diff;
    }
    return acc;
}

} // namespace detail

/// Nearest centroid by squared Euclidean distance, ties to the smallest index.
inline std::vector<int> kmeans_predict(const KMeansModel& model, const Tensor& data) {
    if (data.cols() != model.centroids.cols())
        throw DimensionError("kmeans_predict: data " + data.shape_str() +
                             " vs centroids " + model.centroids.shape_str());
    Tensor scores = detail::centroid_scores(data, model.centroids);
    std::vector<int> out(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.cols(); ++c)
            if (scores(i, c) < scores(i, best)) best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

/// k-means++ seeding then Lloyd iterations until the largest centroid shift
/// drops below tol or max_iter is reached. An emptied cluster is reseeded to
/// the point farthest from its assigned centroid.
inline KMeansModel kmeans_fit(const Tensor& data, std::size_t k, std::uint64_t seed,
                              std::size_t max_iter = 300, double tol = 1e-6) {
    const std::size_t n = data.rows(), d = data.cols();
    if (n < k) throw InputError("kmeans_fit: fewer points than clusters");
    if (k == 0) throw InputError("kmeans_fit: k must be positive");
    Rng rng(seed);

    // k-means++: first centroid uniform, the rest proportional to the
    // squared distance to the nearest chosen centroid.
    Tensor centroids({k, d});
    std::size_t first = static_cast<std::size_t>(rng.bounded(n));
    for (std::size_t j = 0; j < d; ++j) centroids(0, j) = data(first, j);
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = detail::row_sq_dist(data, i, centroids, 0);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : dist2) total += v;
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.bounded(n));
        }
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = data(pick, j);
        for (std::size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], detail::row_sq_dist(data, i, centroids, c));
    }

    std::vector<int> assign(n, -1);
    std::vector<double> inertia_trace;
    double inertia = 0.0;
    int iterations = 0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        iterations = static_cast<int>(it) + 1;

        Tensor scores = detail::centroid_scores(data, centroids);
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c)
                if (scores(i, c) < scores(i, best)) best = c;
            assign[i] = static_cast<int>(best);
            inertia += detail::row_sq_dist(data, i, centroids, best);
        }
        inertia_trace.push_back(inertia);

        Tensor next({k, d});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            counts[assign[i]] += 1;
            for (std::size_t j = 0; j < d; ++j) next(assign[i], j) += data(i, j);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // farthest point from its own centroid takes over
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double v = detail::row_sq_dist(data, i, centroids, assign[i]);
                    if (v > far_d) {
                        far_d = v;
                        far = i;
                    }
                }
                for (std::size_t j = 0; j < d; ++j) next(c, j) = data(far, j);
            } else {
                for (std::size_t j = 0; j < d; ++j) next(c, j) /= static_cast<double>(counts[c]);
            }
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            shift = std::max(shift, detail::row_sq_dist(next, c, centroids, c));
        centroids = std::move(next);
        if (std::sqrt(shift) < tol) break;
    }

    // inertia against the final centroids
    Tensor scores = detail::centroid_scores(data, centroids);
    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (scores(i, c) < scores(i, best)) best = c;
        inertia += detail::row_sq_dist(data, i, centroids, best);
    }

    KMeansModel model;
    model.centroids = std::move(centroids);
    model.inertia = inertia;
    model.iterations = iterations;
    model.inertia_trace = std::move(inertia_trace);
    return model;
}

struct GmmModel {
    Tensor weights;   // K, on the simplex
    Tensor means;     // K x d
    Tensor variances; // K x d diagonal, >= floor
    std::vector<double> loglik; // total log-likelihood per EM step
};

namespace detail {

/// Log joint densities log w_c + log N(x_i | m_c, diag v_c), shape N x K.
inline Tensor gmm_log_joint(const GmmModel& model, const Tensor& data, const Tensor& data_sq) {
    const std::size_t k = model.weights.numel(), d = data.cols();
    Tensor inv_v({k, d}), m_over_v({k, d});
    std::vector<double> row_const(k);
    const double log2pi = std::log(2.0 * 3.14159265358979323846);
    for (std::size_t c = 0; c < k; ++c) {
        double acc = std::log(model.weights(c)) - 0.5 * static_cast<double>(d) * log2pi;
        for (std::size_t j = 0; j < d; ++j) {
            double v = model.variances(c, j);
            double m = model.means(c, j);
            inv_v(c, j) = 0.5 / v;
            m_over_v(c, j) = m / v;
            acc -= 0.5 * std::log(v) + 0.5 * m * m / v;
        }
        row_const[c] = acc;
    }
    Tensor quad = linalg::matmul_nt(data_sq, inv_v);  // sum_j x^2 / (2v)
    Tensor cross = linalg::matmul_nt(data, m_over_v); // sum_j x m / v
    Tensor out({data.rows(), k});
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t c = 0; c < k; ++c)
            out(i, c) = row_const[c] + cross(i, c) - quad(i, c);
    return out;
}

} // namespace detail

/// EM with diagonal covariances, responsibilities in log space, initialized
/// from a K-means solution. Stops when the log-likelihood gain falls below
/// tol or max_iter is reached.
inline GmmModel gmm_fit(const Tensor& data, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter = 100, double tol = 1e-4,
                        double var_floor = 1e-6) {
    const std::size_t n = data.rows(), d = data.cols();
    if (n < k) throw InputError("gmm_fit: fewer points than components");
    if (k == 0) throw InputError("gmm_fit: k must be positive");

    KMeansModel km = kmeans_fit(data, k, seed, 50, 1e-4);
    std::vector<int> assign = kmeans_predict(km, data);

    GmmModel model;
    model.weights = Tensor({k});
    model.means = km.centroids;
    model.variances = Tensor({k, d});

    std::vector<double> counts(k, 0.0);
    for (int a : assign) counts[a] += 1.0;
    Tensor var_sum({k, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double diff = data(i, j) - model.means(assign[i], j);
            var_sum(assign[i], j) += diff * diff;
        }
    double global_var = 0.0;
    {
        std::vector<double> mean(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) mean[j] += data(i, j);
        for (double& v : mean) v /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                double diff = data(i, j) - mean[j];
                global_var += diff * diff;
            }
        global_var = std::max(global_var / static_cast<double>(n * d), var_floor);
    }
    for (std::size_t c = 0; c < k; ++c) {
        model.weights(c) = std::max(counts[c], 1.0) / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j)
            model.variances(c, j) =
                counts[c] > 1.0
                    ? std::max(var_sum(c, j) / counts[c], var_floor)
                    : global_var;
    }
    double wsum = 0.0;
    for (std::size_t c = 0; c < k; ++c) wsum += model.weights(c);
    for (std::size_t c = 0; c < k; ++c) model.weights(c) /= wsum;

    Tensor data_sq({n, d});
    for (std::size_t i = 0; i < data_sq.numel(); ++i)
        data_sq.data[i] = data.data[i] * data.data[i];

    for (std::size_t it = 0; it < max_iter; ++it) {
        Tensor log_joint = detail::gmm_log_joint(model, data, data_sq);

        double total = 0.0;
        Tensor gamma({n, k});
        for (std::size_t i = 0; i < n; ++i) {
            double mx = log_joint(i, 0);
            for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, log_joint(i, c));
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) sum += std::exp(log_joint(i, c) - mx);
            double lse = mx + std::log(sum);
            total += lse;
            for (std::size_t c = 0; c < k; ++c) gamma(i, c) = std::exp(log_joint(i, c) - lse);
        }
        model.loglik.push_back(total);

        // M-step
        Tensor nk({k});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c) nk(c) += gamma(i, c);
        Tensor gx = linalg::matmul_tn(gamma, data);    // K x d
        Tensor gx2 = linalg::matmul_tn(gamma, data_sq); // K x d
        for (std::size_t c = 0; c < k; ++c) {
            double denom = std::max(nk(c), 1e-10);
            model.weights(c) = nk(c) / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) {
                double m = gx(c, j) / denom;
                model.means(c, j) = m;
                model.variances(c, j) = std::max(gx2(c, j) / denom - m * m, var_floor);
            }
        }
        double wtotal = 0.0;
        for (std::size_t c = 0; c < k; ++c) wtotal += model.weights(c);
        for (std::size_t c = 0; c < k; ++c) model.weights(c) /= wtotal;

        if (model.loglik.size() >= 2) {
            double gain = model.loglik.back() - model.loglik[model.loglik.size() - 2];
            if (gain < tol) break;
        }
    }
    return model;
}

/// Responsibilities for held-out rows, shape N x K.
inline Tensor gmm_responsibilities(const GmmModel& model, const Tensor& data) {
    if (data.cols() != model.means.cols())
        throw DimensionError("gmm: data " + data.shape_str() + " vs means " +
                             model.means.shape_str());
    Tensor data_sq({data.rows(), data.cols()});
    for (std::size_t i = 0; i < data_sq.numel(); ++i)
        data_sq.data[i] = data.data[i] * data.data[i];
    Tensor log_joint = detail::gmm_log_joint(model, data, data_sq);
    const std::size_t k = model.weights.numel();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        double mx = log_joint(i, 0);
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, log_joint(i, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < k; ++c) sum += std::exp(log_joint(i, c) - mx);
        double lse = mx + std::log(sum);
        for (std::size_t c = 0; c < k; ++c) log_joint(i, c) = std::exp(log_joint(i, c) - lse);
    }
    return log_joint;
}

/// Argmax responsibility, ties to the smallest index.
inline std::vector<int> gmm_predict(const GmmModel& model, const Tensor& data) {
    Tensor gamma = gmm_responsibilities(model, data);
    std::vector<int> out(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < gamma.cols(); ++c)
            if (gamma(i, c) > gamma(i, best)) best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

} // namespace vab
