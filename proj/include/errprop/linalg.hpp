/**
 * @file linalg.hpp
 * @brief Dense matrix aliases and small helpers on top of Eigen.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <vector>

namespace errprop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

[[nodiscard]] inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

[[nodiscard]] inline Vector to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

[[nodiscard]] inline std::vector<double> to_std(const Eigen::Ref<const Vector>& v) {
  return {v.data(), v.data() + v.size()};
}

/// Builds a dense matrix from row lists; rows must have equal length.
[[nodiscard]] inline Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Index>(rows.size());
  const auto t = n == 0 ? Index{0} : static_cast<Index>(rows.begin()->size());
  Matrix m(n, t);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

/// (M + Mᵀ)/2; the result is exactly symmetric because IEEE addition commutes.
[[nodiscard]] inline Matrix symmetrized(const Eigen::Ref<const Matrix>& m) {
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
  return out;
}

}  // namespace errprop
