#pragma once

#include <Eigen/Dense>
#include <type_traits>

#include "pluriflow/common.hpp"

namespace pluriflow::detail {

template <int D>
using Mat = Eigen::Matrix<cplx, D, D, Eigen::RowMajor>;

template <int D>
using CMap = Eigen::Map<const Mat<D>>;

template <int D>
using MMap = Eigen::Map<Mat<D>>;

/// Calls f(std::integral_constant<int, n>) for the complex dimension n in {1, 2}.
template <class F>
decltype(auto) with_dim(int n, F&& f) {
  if (n == 1) return f(std::integral_constant<int, 1>{});
  return f(std::integral_constant<int, 2>{});
}

/// U(b) = [[I, b], [0, I]].
template <int n>
Mat<2 * n> shift(const cplx* b) {
  Mat<2 * n> U = Mat<2 * n>::Identity();
  U.template block<n, n>(0, n) = CMap<n>(b);
  return U;
}

}  // namespace pluriflow::detail
