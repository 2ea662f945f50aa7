#pragma once
#include <cmath>
#include <functional>

#include "vab/linalg.hpp"
#include "vab/tensor.hpp"

// Minimal differentiable-compute layer set: affine, ReLU, sigmoid and
// log-softmax with analytic forward/backward passes, plus a central
// finite-difference oracle. Backward passes take cached forward values.
// Everything here is a pure function of its inputs.

namespace vab {

/// Gradients of one affine layer application.
struct LayerGrad {
    Tensor d_input;
    Tensor d_weights;
    Tensor d_bias;
};

/// out[i,j] = sum_k x[i,k] * W[k,j] + b[j]
inline Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.ndim() != 2 || w.ndim() != 2 || x.cols() != w.rows())
        throw DimensionError("affine_forward: input " + x.shape_str() +
                             " does not conform with weights " + w.shape_str());
    if (b.numel() != w.cols())
        throw DimensionError("affine_forward: bias " + b.shape_str() +
                             " does not match weights " + w.shape_str());
    Tensor out = linalg::matmul(x, w);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b(j);
    return out;
}

inline LayerGrad affine_backward(const Tensor& x, const Tensor& w, const Tensor& upstream) {
    if (upstream.rows() != x.rows() || upstream.cols() != w.cols())
        throw DimensionError("affine_backward: upstream " + upstream.shape_str() +
                             " does not conform with weights " + w.shape_str());
    LayerGrad g;
    g.d_input = linalg::matmul_nt(upstream, w);
    g.d_weights = linalg::matmul_tn(x, upstream);
    g.d_bias = Tensor({w.cols()});
    for (std::size_t i = 0; i < upstream.rows(); ++i)
        for (std::size_t j = 0; j < upstream.cols(); ++j) g.d_bias(j) += upstream(i, j);
    return g;
}

inline Tensor relu_forward(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

/// Subgradient at exactly 0 is 0: mask is x > 0.
inline Tensor relu_backward(const Tensor& x, const Tensor& upstream) {
    require_same_shape(x, upstream, "relu_backward");
    Tensor out = upstream;
    for (std::size_t i = 0; i < out.numel(); ++i)
        if (!(x.data[i] > 0.0)) out.data[i] = 0.0;
    return out;
}

/// Numerically stable logistic, branching on the sign of the argument.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline Tensor sigmoid_forward(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = sigmoid(v);
    return out;
}

/// Takes the cached forward output y, not the input.
inline Tensor sigmoid_backward(const Tensor& y_forward, const Tensor& upstream) {
    require_same_shape(y_forward, upstream, "sigmoid_backward");
    Tensor out = upstream;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double y = y_forward.data[i];
        out.data[i] *= y * (1.0 - y);
    }
    return out;
}

/// Row-wise log-softmax with max subtraction.
inline Tensor log_softmax_forward(const Tensor& x) {
    if (x.ndim() != 2)
        throw DimensionError("log_softmax_forward: expected 2-D input, got " + x.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) sum += std::exp(x(i, j) - mx);
        double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) - lse;
    }
    return out;
}

/// d_x = upstream - softmax(x) * rowsum(upstream), from cached log-softmax output.
inline Tensor log_softmax_backward(const Tensor& y_forward, const Tensor& upstream) {
    require_same_shape(y_forward, upstream, "log_softmax_backward");
    Tensor out = upstream;
    for (std::size_t i = 0; i < y_forward.rows(); ++i) {
        double rowsum = 0.0;
        for (std::size_t j = 0; j < y_forward.cols(); ++j) rowsum += upstream(i, j);
        for (std::size_t j = 0; j < y_forward.cols(); ++j)
            out(i, j) = upstream(i, j) - std::exp(y_forward(i, j)) * rowsum;
    }
    return out;
}

/// Central finite differences of a scalar field, one coordinate at a time.
inline Tensor finite_difference(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                double h) {
    Tensor grad(x.shape);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        double orig = probe.data[i];
        probe.data[i] = orig + h;
        double fp = f(probe);
        probe.data[i] = orig - h;
        double fm = f(probe);
        probe.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw InputError("finite_difference: non-finite function value at coordinate " +
                             std::to_string(i));
        grad.data[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace vab
