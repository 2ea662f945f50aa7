#pragma once
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vab/error.hpp"

namespace vab {

/// Dense row-major array of 64-bit reals. The universal numeric carrier:
/// batches are stored batch-major (rows = samples).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shp)
        : shape(std::move(shp)), data(numel_of(shape), 0.0) {}

    Tensor(std::vector<std::size_t> shp, std::vector<double> values)
        : shape(std::move(shp)), data(std::move(values)) {
        if (numel_of(shape) != data.size())
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str());
    }

    static std::size_t numel_of(const std::vector<std::size_t>& shp) {
        std::size_t n = 1;
        for (std::size_t e : shp) n *= e;
        return shp.empty() ? 0 : n;
    }

    static Tensor zeros(std::vector<std::size_t> shp) { return Tensor(std::move(shp)); }

    static Tensor full(std::vector<std::size_t> shp, double value) {
        Tensor t(std::move(shp));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    /// 2-D tensor from nested braces, for tests and small fixtures.
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        std::size_t r = rows.size();
        std::size_t c = r ? rows.begin()->size() : 0;
        Tensor t({r, c});
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("ragged rows in tensor literal");
            for (double v : row) t.data[i++] = v;
        }
        return t;
    }

    static Tensor vector_of(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    static Tensor identity(std::size_t n) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0;
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t ndim() const { return shape.size(); }

    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    std::string shape_str() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << ']';
        return os.str();
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_shape(const Tensor& t, const std::vector<std::size_t>& want,
                          const char* what) {
    if (t.shape != want) {
        Tensor probe;
        probe.shape = want;
        throw DimensionError(std::string(what) + ": expected shape " + probe.shape_str() +
                             ", got " + t.shape_str());
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": shapes " + a.shape_str() + " and " +
                             b.shape_str() + " differ");
}

} // namespace vab
