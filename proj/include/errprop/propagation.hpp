/**
 * @file propagation.hpp
 * @brief Covariance propagation, uncertainty synthesis and the probability
 *        expression of the true value.
 */
#pragma once

#include <errprop/error_model.hpp>
#include <errprop/errors.hpp>
#include <errprop/linalg.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace errprop {

/// Linear model Z = K·X + K₀. Only K matters for error propagation: the
/// offset is a constant and has zero variance.
class LinearMap {
 public:
  explicit LinearMap(Matrix k, std::optional<Vector> offset = std::nullopt)
      : k_(std::move(k)), offset_(offset ? std::move(*offset) : Vector::Zero(k_.rows())) {
    if (k_.rows() == 0 || k_.cols() == 0) throw InputError("linear map must be non-empty");
    if (!k_.allFinite()) throw InputError("linear map has non-finite entries");
    if (offset_.size() != k_.rows())
      throw InputError("linear map offset has " + std::to_string(offset_.size()) +
                       " entries for " + std::to_string(k_.rows()) + " rows");
    if (!offset_.allFinite()) throw InputError("linear map offset has non-finite entries");
  }

  [[nodiscard]] const Matrix& matrix() const noexcept { return k_; }
  [[nodiscard]] const Vector& offset() const noexcept { return offset_; }
  [[nodiscard]] Index rows() const noexcept { return k_.rows(); }
  [[nodiscard]] Index cols() const noexcept { return k_.cols(); }

  [[nodiscard]] Vector apply(const Vector& x) const {
    if (x.size() != k_.cols()) throw InputError("linear map applied to vector of wrong length");
    return k_ * x + offset_;
  }

 private:
  Matrix k_;
  Vector offset_;
};

/// D(ΔZ) = K·D(ΔX)·Kᵀ, symmetrized after the product.
[[nodiscard]] inline CovarianceMatrix propagate(const LinearMap& map,
                                                const CovarianceMatrix& d_in) {
  if (map.cols() != d_in.dim())
    throw InputError("propagate: map has " + std::to_string(map.cols()) +
                     " columns but covariance has dimension " + std::to_string(d_in.dim()));
  const Matrix& k = map.matrix();
  const Matrix kd = k * d_in.matrix();
  return CovarianceMatrix(symmetrized(kd * k.transpose()));
}

[[nodiscard]] inline CovarianceMatrix propagate(const Matrix& k, const CovarianceMatrix& d_in) {
  return propagate(LinearMap(k), d_in);
}

/// (expectation, variance) of one quantity.
struct ProbabilityExpression {
  double expectation = 0.0;
  double variance = 0.0;
};

/// The three columns of the probability expression x_T = x₀ − Δ:
/// the measured value is a constant, the error has zero mean, and the true
/// value inherits the mean of the former and the variance of the latter.
struct TrueValueExpression {
  ProbabilityExpression measured_value;
  ProbabilityExpression error;
  ProbabilityExpression true_value;
};

[[nodiscard]] inline TrueValueExpression true_value_expression(double measured_value,
                                                               double total_sigma) {
  if (!std::isfinite(measured_value)) throw InputError("measured value must be finite");
  if (!(total_sigma >= 0.0) || !std::isfinite(total_sigma))
    throw InputError("total standard deviation must be finite and >= 0");
  const double var = total_sigma * total_sigma;
  return {{measured_value, 0.0}, {0.0, var}, {measured_value, var}};
}

struct SynthesisOptions {
  /// Cross-covariance of the Type A and Type B errors; 0 means independent.
  std::optional<double> covariance;
  double coverage_factor = 1.0;
  double measured_value = 0.0;
};

struct UncertaintyReport {
  double typeA = 0.0;
  double typeB = 0.0;
  double covariance = 0.0;
  double total = 0.0;
  double coverage_factor = 1.0;
  double expanded = 0.0;
  double true_value_expectation = 0.0;
  double true_value_variance = 0.0;
};

/// Total uncertainty of Δ = Δ_A + Δ_B.
///
/// Computed as the scalar propagation of [[σ_A², c], [c, σ_B²]] through
/// K = (1 1), which reduces to √(σ_A² + σ_B²) for independent components.
[[nodiscard]] inline UncertaintyReport synthesize(double typeA, double typeB,
                                                  const SynthesisOptions& options = {}) {
  if (!(typeA >= 0.0) || !std::isfinite(typeA))
    throw InputError("synthesize: typeA must be finite and >= 0");
  if (!(typeB >= 0.0) || !std::isfinite(typeB))
    throw InputError("synthesize: typeB must be finite and >= 0");
  const double c = options.covariance.value_or(0.0);
  if (!std::isfinite(c) || std::abs(c) > typeA * typeB)
    throw InputError("synthesize: |covariance| exceeds typeA*typeB (Cauchy-Schwarz bound)");
  if (!(options.coverage_factor > 0.0) || !std::isfinite(options.coverage_factor))
    throw InputError("synthesize: coverage factor must be > 0");

  Matrix d(2, 2);
  d << typeA * typeA, c, c, typeB * typeB;
  const CovarianceMatrix total_cov = propagate(Matrix::Ones(1, 2), CovarianceMatrix(d));

  UncertaintyReport r;
  r.typeA = typeA;
  r.typeB = typeB;
  r.covariance = c;
  r.total = std::sqrt(total_cov(0, 0));
  r.coverage_factor = options.coverage_factor;
  r.expanded = r.coverage_factor * r.total;
  const auto tv = true_value_expression(options.measured_value, r.total);
  r.true_value_expectation = tv.true_value.expectation;
  r.true_value_variance = tv.true_value.variance;
  return r;
}

struct StandardUncertainty {
  double sigma = 0.0;
  double variance = 0.0;
};

/// σ = U/k for an expanded uncertainty U quoted with coverage factor k.
[[nodiscard]] inline StandardUncertainty expanded_to_standard(double expanded,
                                                              double coverage_factor) {
  if (!(coverage_factor > 0.0) || !std::isfinite(coverage_factor))
    throw InputError("coverage factor must be finite and > 0");
  if (!(expanded >= 0.0) || !std::isfinite(expanded))
    throw InputError("expanded uncertainty must be finite and >= 0");
  const double sigma = expanded / coverage_factor;
  return {sigma, sigma * sigma};
}

}  // namespace errprop
