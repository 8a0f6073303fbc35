/**
 * @file adjustment.hpp
 * @brief Least-squares adjustment of over-determined observation systems.
 *
 * Model: V = X − A·Y with n observations and t < n parameters. The solution
 * Y = [AᵀA]⁻¹AᵀX is computed from a Householder QR factorization of A. The
 * unit standard deviation follows the Bessel formula σ(Δx) = √(ΣV²/(n − t))
 * and the Type A covariance of the solution is D(ΔY) = σ²(Δx)·[AᵀA]⁻¹.
 *
 * All observations are assumed to carry the same error variance. Correlated
 * or unequal observation errors are handled afterwards by propagating their
 * covariance through solution_map() (see propagation.hpp).
 */
#pragma once

#include <errprop/errors.hpp>
#include <errprop/linalg.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace errprop {

namespace detail {

/// Error-free transformations: a + b = s + e and a·b = p + e exactly.
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double z = s - a;
  e = (a - (s - z)) + (b - z);
}

inline void two_prod(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

/// x − A·y per row as an unevaluated sum hi + lo, accurate to about twice
/// the working precision (compensated dot product).
inline void accurate_residuals(const Matrix& a, const Vector& y, const Vector& x, Vector& hi,
                               Vector& lo) {
  hi.resize(a.rows());
  lo.resize(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    double sum = x(i);
    double comp = 0.0;
    for (Index j = 0; j < a.cols(); ++j) {
      double p, p_err, s, s_err;
      two_prod(a(i, j), y(j), p, p_err);
      two_sum(sum, -p, s, s_err);
      sum = s;
      comp += s_err - p_err;
    }
    two_sum(sum, comp, hi(i), lo(i));
  }
}

/// x − A·y rounded once.
[[nodiscard]] inline Vector accurate_residuals(const Matrix& a, const Vector& y, const Vector& x) {
  Vector hi, lo;
  accurate_residuals(a, y, x, hi, lo);
  return hi;
}

/// Aᵀ(hi + lo), again with a compensated dot product per column.
[[nodiscard]] inline Vector accurate_gradient(const Matrix& a, const Vector& hi, const Vector& lo) {
  Vector g(a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    double sum = 0.0;
    double comp = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
      for (double r : {hi(i), lo(i)}) {
        double p, p_err, s, s_err;
        two_prod(a(i, j), r, p, p_err);
        two_sum(sum, p, s, s_err);
        sum = s;
        comp += s_err + p_err;
      }
    }
    g(j) = sum + comp;
  }
  return g;
}

}  // namespace detail

/// n×t coefficient matrix with n > t and finite entries. Column rank is
/// checked when a LeastSquares solver is built from it.
class DesignMatrix {
 public:
  explicit DesignMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.cols() < 1) throw InputError("design matrix needs at least one column");
    if (a_.rows() <= a_.cols())
      throw InputError("design matrix must have more rows than columns (n > t), got " +
                       std::to_string(a_.rows()) + "x" + std::to_string(a_.cols()));
    if (!a_.allFinite()) throw InputError("design matrix has non-finite entries");
  }

  /// Single-parameter model x_i = a_i·y.
  static DesignMatrix column(const Vector& a) { return DesignMatrix(Matrix(a)); }
  /// Direct model x_i = y.
  static DesignMatrix ones(Index n) { return DesignMatrix(Matrix::Ones(n, 1)); }

  [[nodiscard]] Index rows() const noexcept { return a_.rows(); }
  [[nodiscard]] Index cols() const noexcept { return a_.cols(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return a_; }

 private:
  Matrix a_;
};

struct AdjustOptions {
  /// Warn when n − t falls below this many degrees of freedom.
  int dof_warning_threshold = 10;
};

struct AdjustmentResult {
  Vector measured_values;    ///< Y
  Vector residuals;          ///< V = X − A·Y
  double sigma_unit = 0.0;   ///< σ(Δx), Bessel
  Matrix cofactor;           ///< [AᵀA]⁻¹
  Matrix solution_map;       ///< [AᵀA]⁻¹Aᵀ, maps observation errors to solution errors
  Matrix typeA_covariance;   ///< σ²(Δx)·[AᵀA]⁻¹
  int degrees_of_freedom = 0;
  bool low_dof = false;
  std::vector<std::string> warnings;

  /// √diag(D(ΔY)): the Type A uncertainty of each solved parameter.
  [[nodiscard]] Vector standard_uncertainties() const {
    return typeA_covariance.diagonal().cwiseSqrt();
  }
};

/// Prefactored solver for a fixed design matrix; reuse it across many observation vectors.
class LeastSquares {
 public:
  /// cond(AᵀA) above this is treated as rank deficiency.
  static constexpr double kMaxCondition = 1e12;
  /// Upper bound on iterative-refinement passes after the QR solve.
  static constexpr int kRefinementSteps = 4;

  explicit LeastSquares(DesignMatrix design, AdjustOptions options = {})
      : design_(std::move(design)), options_(options), qr_(design_.matrix()) {
    const Matrix& a = design_.matrix();
    const Index t = a.cols();

    const Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(t - 1);
    if (smin == 0.0 || (smax / smin) * (smax / smin) > kMaxCondition)
      throw SingularityError(deficiency_message(a), deficient_columns(a));

    const Matrix r = qr_.matrixQR().topRows(t).triangularView<Eigen::Upper>();
    const Matrix r_inv =
        r.triangularView<Eigen::Upper>().solve(Matrix::Identity(t, t));
    cofactor_ = symmetrized(r_inv * r_inv.transpose());
    solution_map_ = cofactor_ * a.transpose();
  }

  [[nodiscard]] const DesignMatrix& design() const noexcept { return design_; }
  [[nodiscard]] const Matrix& cofactor() const noexcept { return cofactor_; }
  [[nodiscard]] const Matrix& solution_map() const noexcept { return solution_map_; }
  [[nodiscard]] int degrees_of_freedom() const noexcept {
    return static_cast<int>(design_.rows() - design_.cols());
  }

  struct Fit {
    Vector measured_values;
    Vector residuals;
    double sigma_unit = 0.0;
  };

  /// Y, V and σ(Δx) only; no covariance bookkeeping.
  [[nodiscard]] Fit fit(const Vector& x) const {
    check_observations(x);
    Fit f;
    const Matrix& a = design_.matrix();
    f.measured_values = qr_.solve(x);
    // Refinement on the seminormal equations RᵀR·c = Aᵀr. The accurate Aᵀr
    // cancels the part of r orthogonal to the columns of A, so the correction
    // is accurate relative to the remaining error rather than to |r|, and a
    // representable solution is reached exactly.
    Vector hi, lo;
    for (int step = 0; step < kRefinementSteps; ++step) {
      detail::accurate_residuals(a, f.measured_values, x, hi, lo);
      const Vector correction = seminormal_solve(detail::accurate_gradient(a, hi, lo));
      if (correction.isZero(0.0)) break;
      f.measured_values += correction;
    }
    f.residuals = detail::accurate_residuals(a, f.measured_values, x);
    f.sigma_unit = std::sqrt(f.residuals.squaredNorm() / degrees_of_freedom());
    return f;
  }

  [[nodiscard]] AdjustmentResult solve(const Vector& x) const {
    Fit f = fit(x);
    AdjustmentResult out;
    out.measured_values = std::move(f.measured_values);
    out.residuals = std::move(f.residuals);
    out.sigma_unit = f.sigma_unit;
    out.cofactor = cofactor_;
    out.solution_map = solution_map_;
    out.typeA_covariance = (out.sigma_unit * out.sigma_unit) * cofactor_;
    out.degrees_of_freedom = degrees_of_freedom();
    flag_low_dof(out, options_);
    return out;
  }

  static void flag_low_dof(AdjustmentResult& out, const AdjustOptions& options) {
    if (out.degrees_of_freedom < options.dof_warning_threshold) {
      out.low_dof = true;
      out.warnings.push_back("low degrees of freedom: n-t = " +
                             std::to_string(out.degrees_of_freedom) + " < " +
                             std::to_string(options.dof_warning_threshold) +
                             "; the Bessel estimate of sigma_unit is unreliable");
    }
  }

 private:
  /// [AᵀA]⁻¹g through the triangular factor, AᵀA = RᵀR.
  [[nodiscard]] Vector seminormal_solve(const Vector& g) const {
    const Index t = design_.cols();
    const auto r = qr_.matrixQR().topLeftCorner(t, t).triangularView<Eigen::Upper>();
    return r.solve(r.transpose().solve(g));
  }

  void check_observations(const Vector& x) const {
    if (x.size() != design_.rows())
      throw InputError("observation vector has " + std::to_string(x.size()) +
                       " entries, design matrix has " + std::to_string(design_.rows()) + " rows");
    if (!x.allFinite()) throw InputError("observation vector has non-finite entries");
  }

  static std::vector<int> deficient_columns(const Matrix& a) {
    Eigen::ColPivHouseholderQR<Matrix> cp(a);
    cp.setThreshold(1.0 / std::sqrt(kMaxCondition));
    const auto& perm = cp.colsPermutation().indices();
    std::vector<int> cols;
    const Index rank = std::min<Index>(cp.rank(), a.cols() - 1);
    for (Index k = rank; k < a.cols(); ++k) cols.push_back(perm(k));
    return cols;
  }

  static std::string deficiency_message(const Matrix& a) {
    std::string msg = "normal matrix AᵀA is singular; dependent design columns:";
    for (int c : deficient_columns(a)) msg += " " + std::to_string(c);
    return msg;
  }

  DesignMatrix design_;
  AdjustOptions options_;
  Eigen::HouseholderQR<Matrix> qr_;
  Matrix cofactor_;
  Matrix solution_map_;
};

/// Multivariate indirect model V = X − A·Y.
[[nodiscard]] inline AdjustmentResult solve(const DesignMatrix& a, const Vector& x,
                                            AdjustOptions options = {}) {
  return LeastSquares(a, options).solve(x);
}

/// Single-variable indirect model v_i = x_i − a_i·y:
/// y = Σa_i·x_i / Σa_i², σ(Δx) = √(ΣV²/(n − 1)), σ(Δy) = σ(Δx)/√Σa_i².
[[nodiscard]] inline AdjustmentResult solve_single_indirect(const Vector& a, const Vector& x,
                                                            AdjustOptions options = {}) {
  if (a.size() != x.size())
    throw InputError("coefficient and observation vectors differ in length");
  if (a.size() < 2) throw InputError("need at least 2 observations for one parameter");
  if (!a.allFinite() || !x.allFinite()) throw InputError("non-finite coefficient or observation");
  const double saa = a.squaredNorm();
  if (saa == 0.0) throw InputError("coefficient vector is all zero");

  AdjustmentResult out;
  const double y = a.dot(x) / saa;
  out.measured_values = Vector::Constant(1, y);
  out.residuals = x - a * y;
  out.degrees_of_freedom = static_cast<int>(x.size() - 1);
  out.sigma_unit = std::sqrt(out.residuals.squaredNorm() / out.degrees_of_freedom);
  out.cofactor = Matrix::Constant(1, 1, 1.0 / saa);
  out.solution_map = a.transpose() / saa;
  out.typeA_covariance = (out.sigma_unit * out.sigma_unit) * out.cofactor;
  LeastSquares::flag_low_dof(out, options);
  return out;
}

/// Direct model v_i = x_i − y: y is the mean, σ(Δy) = σ(Δx)/√n.
///
/// The mean is accumulated relative to the first observation, so constant
/// observations give y equal to that constant and all residuals exactly 0.
[[nodiscard]] inline AdjustmentResult solve_direct(const Vector& x, AdjustOptions options = {}) {
  const Index n = x.size();
  if (n < 2) throw InputError("direct model needs at least 2 observations");
  if (!x.allFinite()) throw InputError("observation vector has non-finite entries");

  const double origin = x(0);
  const Vector shifted = x.array() - origin;
  const double offset = shifted.sum() / static_cast<double>(n);

  AdjustmentResult out;
  out.measured_values = Vector::Constant(1, origin + offset);
  out.residuals = shifted.array() - offset;
  out.degrees_of_freedom = static_cast<int>(n - 1);
  out.sigma_unit = std::sqrt(out.residuals.squaredNorm() / out.degrees_of_freedom);
  out.cofactor = Matrix::Constant(1, 1, 1.0 / static_cast<double>(n));
  out.solution_map = Matrix::Constant(1, n, 1.0 / static_cast<double>(n));
  out.typeA_covariance = (out.sigma_unit * out.sigma_unit) * out.cofactor;
  LeastSquares::flag_low_dof(out, options);
  return out;
}

}  // namespace errprop
