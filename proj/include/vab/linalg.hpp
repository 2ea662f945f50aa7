#pragma once
#include <Eigen/Dense>

#include "vab/tensor.hpp"

namespace vab::linalg {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using CMapMat = Eigen::Map<const EMat>;

inline CMapMat as_matrix(const Tensor& t) {
    return CMapMat(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

inline MapMat as_matrix(Tensor& t) {
    return MapMat(t.data.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

/// C = A * B for 2-D tensors.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor c({a.rows(), b.cols()});
    as_matrix(c).noalias() = as_matrix(a) * as_matrix(b);
    return c;
}

/// C = A * B^T.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    Tensor c({a.rows(), b.rows()});
    as_matrix(c).noalias() = as_matrix(a) * as_matrix(b).transpose();
    return c;
}

/// C = A^T * B.
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    Tensor c({a.cols(), b.cols()});
    as_matrix(c).noalias() = as_matrix(a).transpose() * as_matrix(b);
    return c;
}

} // namespace vab::linalg
