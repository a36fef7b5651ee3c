#pragma once

#include <Eigen/Core>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE
namespace detail {

using RowMatrix =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

inline ConstMatMap cmap(const Real* p, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatMap(p, rows, cols);
}
inline MatMap map(Real* p, Eigen::Index rows, Eigen::Index cols) {
  return MatMap(p, rows, cols);
}

}  // namespace detail
FASTRE_END_NAMESPACE
