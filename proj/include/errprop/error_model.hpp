/**
 * @file error_model.hpp
 * @brief Error sequences, error budgets and the covariance matrices they induce.
 *
 * An observation error is modelled as an algebraic sum of source
 * contributions, each one a gain times a source value:
 *
 *     Δx_i = a + b·x_i + c_i + Σ_k g_ik·d_k
 *
 * (zero-point a, proportional b, scale non-uniformity c_i, custom patterns
 * g_ik). A source drawn once per campaign is shared by every observation and
 * therefore correlates them; a source drawn per observation only adds to the
 * diagonal of D(ΔX).
 */
#pragma once

#include <errprop/errors.hpp>
#include <errprop/linalg.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace errprop {

enum class SourceKind { ZeroPoint, Proportional, ScaleNonUniformity, Custom };

enum class Sharing { SharedAcrossObservations, IndependentPerObservation };

/// Default sharing of a source kind: only scale non-uniformity varies per observation.
[[nodiscard]] constexpr Sharing default_sharing(SourceKind kind) noexcept {
  return kind == SourceKind::ScaleNonUniformity ? Sharing::IndependentPerObservation
                                                : Sharing::SharedAcrossObservations;
}

[[nodiscard]] inline const char* to_string(SourceKind kind) noexcept {
  switch (kind) {
    case SourceKind::ZeroPoint: return "zero_point";
    case SourceKind::Proportional: return "proportional";
    case SourceKind::ScaleNonUniformity: return "scale_nonuniformity";
    case SourceKind::Custom: return "custom";
  }
  return "unknown";
}

/// One declared error source with its standard deviation.
///
/// `sigma` is in observation units for zero-point, scale non-uniformity and
/// custom sources, and a dimensionless ratio for the proportional source.
/// Custom sources carry a per-observation coefficient profile.
struct ErrorSource {
  SourceKind kind = SourceKind::ZeroPoint;
  double sigma = 0.0;
  Sharing sharing = Sharing::SharedAcrossObservations;
  std::vector<double> coefficients;

  static ErrorSource zero_point(double sigma) {
    return {SourceKind::ZeroPoint, sigma, default_sharing(SourceKind::ZeroPoint), {}};
  }
  static ErrorSource proportional(double sigma) {
    return {SourceKind::Proportional, sigma, default_sharing(SourceKind::Proportional), {}};
  }
  static ErrorSource scale_nonuniformity(double sigma) {
    return {SourceKind::ScaleNonUniformity, sigma,
            default_sharing(SourceKind::ScaleNonUniformity), {}};
  }
  static ErrorSource custom(double sigma, std::vector<double> coefficients,
                            Sharing sharing = Sharing::SharedAcrossObservations) {
    return {SourceKind::Custom, sigma, sharing, std::move(coefficients)};
  }

  [[nodiscard]] bool shared() const noexcept {
    return sharing == Sharing::SharedAcrossObservations;
  }

  /// Coefficient multiplying this source's value in observation `index` of magnitude `x`.
  /// The proportional gain is the observed magnitude itself, standing in for
  /// the unknown true magnitude.
  [[nodiscard]] double gain(double x, std::size_t index) const {
    switch (kind) {
      case SourceKind::Proportional: return x;
      case SourceKind::Custom: return coefficients.at(index);
      default: return 1.0;
    }
  }
};

/// Ordered list of error sources describing one instrument/procedure.
class ErrorBudget {
 public:
  ErrorBudget() = default;

  explicit ErrorBudget(std::vector<ErrorSource> sources) : sources_(std::move(sources)) {
    for (std::size_t k = 0; k < sources_.size(); ++k) {
      const auto& s = sources_[k];
      if (!std::isfinite(s.sigma) || s.sigma < 0.0)
        throw InputError("error source " + std::to_string(k) + ": sigma must be finite and >= 0");
      if (s.kind == SourceKind::Custom) {
        if (s.coefficients.empty())
          throw InputError("error source " + std::to_string(k) +
                           ": custom source needs a coefficient profile");
        if (!std::all_of(s.coefficients.begin(), s.coefficients.end(),
                         [](double c) { return std::isfinite(c); }))
          throw InputError("error source " + std::to_string(k) + ": non-finite coefficient");
      } else if (!s.coefficients.empty()) {
        throw InputError("error source " + std::to_string(k) +
                         ": only custom sources take coefficients");
      }
    }
  }

  [[nodiscard]] const std::vector<ErrorSource>& sources() const noexcept { return sources_; }
  [[nodiscard]] std::size_t size() const noexcept { return sources_.size(); }
  [[nodiscard]] bool empty() const noexcept { return sources_.empty(); }
  [[nodiscard]] const ErrorSource& operator[](std::size_t k) const { return sources_[k]; }

  /// Throws unless every custom profile has exactly `n` coefficients.
  void check_applicable(std::size_t n) const {
    for (std::size_t k = 0; k < sources_.size(); ++k) {
      const auto& s = sources_[k];
      if (s.kind == SourceKind::Custom && s.coefficients.size() != n)
        throw InputError("error source " + std::to_string(k) + ": custom profile has " +
                         std::to_string(s.coefficients.size()) + " coefficients for " +
                         std::to_string(n) + " observations");
    }
  }

 private:
  std::vector<ErrorSource> sources_;
};

/// A named sequence of error values ΔX.
struct ErrorSequence {
  std::vector<double> values;
  std::string label;

  ErrorSequence() = default;
  explicit ErrorSequence(std::vector<double> v, std::string l = {})
      : values(std::move(v)), label(std::move(l)) {
    if (!std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); }))
      throw InputError("error sequence '" + label + "' contains non-finite values");
  }

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] bool empty() const noexcept { return values.empty(); }
};

/// Symmetric positive-semidefinite matrix D(ΔX) = E(ΔX·ΔXᵀ).
class CovarianceMatrix {
 public:
  /// Smallest eigenvalue may be as low as -kPsdTolerance × largest.
  static constexpr double kPsdTolerance = 1e-9;

  explicit CovarianceMatrix(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw InputError("covariance matrix must be square and non-empty, got " +
                       std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
    if (!m_.allFinite()) throw InputError("covariance matrix has non-finite entries");
    for (Index i = 0; i < m_.rows(); ++i)
      for (Index j = i + 1; j < m_.cols(); ++j)
        if (m_(i, j) != m_(j, i))
          throw InputError("covariance matrix is not symmetric at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
    for (Index i = 0; i < m_.rows(); ++i)
      if (m_(i, i) < 0.0)
        throw PsdViolation("covariance matrix has negative variance at index " +
                           std::to_string(i));
    if (m_.rows() > 1) {
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(m_, Eigen::EigenvaluesOnly);
      const auto& ev = eig.eigenvalues();
      const double largest = std::max(ev.maxCoeff(), 0.0);
      if (ev.minCoeff() < -kPsdTolerance * largest || (largest == 0.0 && ev.minCoeff() < 0.0))
        throw PsdViolation("covariance matrix is not positive semidefinite (smallest eigenvalue " +
                           std::to_string(ev.minCoeff()) + ")");
    }
  }

  static CovarianceMatrix zero(Index dim) { return CovarianceMatrix(Matrix::Zero(dim, dim)); }
  static CovarianceMatrix diagonal(const Vector& variances) {
    return CovarianceMatrix(variances.asDiagonal().toDenseMatrix());
  }

  [[nodiscard]] Index dim() const noexcept { return m_.rows(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] double operator()(Index i, Index j) const { return m_(i, j); }

  [[nodiscard]] Vector standard_deviations() const { return m_.diagonal().cwiseSqrt(); }

  friend CovarianceMatrix operator+(const CovarianceMatrix& a, const CovarianceMatrix& b) {
    if (a.dim() != b.dim()) throw InputError("covariance dimension mismatch in sum");
    return CovarianceMatrix(a.m_ + b.m_);
  }

 private:
  Matrix m_;
};

/// Realized error of one observation: the algebraic sum of gain × source value.
///
/// `realizations` holds one value per budget source; `index` selects the
/// entry of custom coefficient profiles.
[[nodiscard]] inline double compose_error(const ErrorBudget& budget,
                                          std::span<const double> realizations, double x,
                                          std::size_t index = 0) {
  if (realizations.size() != budget.size())
    throw InputError("compose_error: " + std::to_string(realizations.size()) +
                     " realizations for " + std::to_string(budget.size()) + " sources");
  double total = 0.0;
  for (std::size_t k = 0; k < budget.size(); ++k) {
    const auto& s = budget[k];
    if (s.kind == SourceKind::Custom && index >= s.coefficients.size())
      throw InputError("compose_error: observation index outside custom profile");
    total += s.gain(x, index) * realizations[k];
  }
  return total;
}

/// Composes the error vector of a whole campaign.
///
/// `draws[k]` carries the values of source k: one value for a shared source,
/// one per observation for an independent source.
[[nodiscard]] inline Vector compose_errors(const ErrorBudget& budget,
                                           const std::vector<Vector>& draws, const Vector& x) {
  const auto n = static_cast<std::size_t>(x.size());
  if (draws.size() != budget.size())
    throw InputError("compose_errors: draw count does not match source count");
  budget.check_applicable(n);
  Vector err = Vector::Zero(x.size());
  for (std::size_t k = 0; k < budget.size(); ++k) {
    const auto& s = budget[k];
    const auto expected = s.shared() ? Index{1} : x.size();
    if (draws[k].size() != expected)
      throw InputError("compose_errors: source " + std::to_string(k) + " expects " +
                       std::to_string(expected) + " draws");
    for (Index i = 0; i < x.size(); ++i) {
      const double value = s.shared() ? draws[k](0) : draws[k](i);
      err(i) += s.gain(x(i), static_cast<std::size_t>(i)) * value;
    }
  }
  return err;
}

namespace detail {
[[nodiscard]] inline double source_term(double gain_i, double gain_j, double sigma) {
  return (gain_i * gain_j) * (sigma * sigma);
}
}  // namespace detail

/// σ²(Δx) of a single observation: independent sources add in quadrature.
[[nodiscard]] inline double observation_variance(const ErrorBudget& budget, double x,
                                                 std::size_t index = 0) {
  if (budget.empty()) throw InputError("observation_variance: empty error budget");
  if (!std::isfinite(x)) throw InputError("observation_variance: non-finite observation");
  double total = 0.0;
  for (const auto& s : budget.sources()) {
    if (s.kind == SourceKind::Custom && index >= s.coefficients.size())
      throw InputError("observation_variance: observation index outside custom profile");
    const double g = s.gain(x, index);
    total += detail::source_term(g, g, s.sigma);
  }
  return total;
}

/// Full D(ΔX) of an observation vector under `budget`.
///
/// Shared sources contribute g_i·g_j·σ² to every entry; independent sources
/// contribute g_i²·σ² to the diagonal only. The diagonal equals
/// observation_variance() bit for bit.
[[nodiscard]] inline CovarianceMatrix observation_covariance(const ErrorBudget& budget,
                                                             const Vector& x) {
  if (x.size() == 0) throw InputError("observation_covariance: empty observation vector");
  if (!x.allFinite()) throw InputError("observation_covariance: non-finite observation");
  budget.check_applicable(static_cast<std::size_t>(x.size()));
  const Index n = x.size();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double total = 0.0;
      for (const auto& s : budget.sources()) {
        if (i != j && !s.shared()) continue;
        total += detail::source_term(s.gain(x(i), static_cast<std::size_t>(i)),
                                     s.gain(x(j), static_cast<std::size_t>(j)), s.sigma);
      }
      d(i, j) = total;
    }
  }
  return CovarianceMatrix(std::move(d));
}

/// Covariance of δ = k + p and ε = k + q for mutually uncorrelated k, p, q:
/// the variance of the communal component k.
[[nodiscard]] inline double co_uncertainty(double sigma_shared) {
  if (!(sigma_shared >= 0.0) || !std::isfinite(sigma_shared))
    throw InputError("co_uncertainty: sigma of the shared component must be finite and >= 0");
  return sigma_shared * sigma_shared;
}

}  // namespace errprop
