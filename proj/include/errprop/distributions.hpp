/**
 * @file distributions.hpp
 * @brief Distributions of regular errors and empirical moment estimation.
 *
 * A regular error (e.g. the cyclic error δ = A·sin(2πD/λ + φ) of a phase
 * distance meter, or the sawtooth rounding error) is a deterministic function
 * of the measurement condition. Over all admissible conditions its values
 * still have a density, a zero expectation and a finite variance:
 *
 *   arcsine (cyclic)   f(δ) = 1/(π·√(A² − δ²)),  |δ| < A,   σ² = A²/2
 *   uniform (rounding) f(δ) = 1/(2a),            |δ| ≤ a,   σ² = a²/3
 *   normal             f(δ) = exp(−δ²/2σ²)/(σ√2π),          σ²
 */
#pragma once

#include <errprop/error_model.hpp>
#include <errprop/errors.hpp>
#include <errprop/random.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace errprop {

class RegularErrorDistribution {
 public:
  enum class Kind { ArcsineCyclic, UniformRounding, Normal };

  static RegularErrorDistribution arcsine_cyclic(double amplitude) {
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
      throw InputError("arcsine distribution: amplitude must be finite and > 0");
    return {Kind::ArcsineCyclic, amplitude};
  }
  static RegularErrorDistribution uniform_rounding(double halfwidth) {
    if (!(halfwidth > 0.0) || !std::isfinite(halfwidth))
      throw InputError("uniform distribution: halfwidth must be finite and > 0");
    return {Kind::UniformRounding, halfwidth};
  }
  static RegularErrorDistribution normal(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw InputError("normal distribution: sigma must be finite and >= 0");
    return {Kind::Normal, sigma};
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  /// Amplitude A, halfwidth a, or sigma, depending on kind().
  [[nodiscard]] double parameter() const noexcept { return parameter_; }

 private:
  RegularErrorDistribution(Kind k, double p) : kind_(k), parameter_(p) {}

  Kind kind_;
  double parameter_;
};

[[nodiscard]] inline const char* to_string(RegularErrorDistribution::Kind kind) noexcept {
  switch (kind) {
    case RegularErrorDistribution::Kind::ArcsineCyclic: return "arcsine";
    case RegularErrorDistribution::Kind::UniformRounding: return "uniform";
    case RegularErrorDistribution::Kind::Normal: return "normal";
  }
  return "unknown";
}

/// Density f(δ). Zero outside the support; +infinity at the arcsine endpoints |δ| = A
/// (and at δ = 0 for a degenerate normal with σ = 0).
[[nodiscard]] inline double pdf(const RegularErrorDistribution& dist, double delta) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double p = dist.parameter();
  switch (dist.kind()) {
    case RegularErrorDistribution::Kind::ArcsineCyclic: {
      const double ad = std::abs(delta);
      if (ad > p) return 0.0;
      if (ad == p) return inf;
      return 1.0 / (std::numbers::pi * std::sqrt((p - ad) * (p + ad)));
    }
    case RegularErrorDistribution::Kind::UniformRounding:
      return std::abs(delta) <= p ? 1.0 / (2.0 * p) : 0.0;
    case RegularErrorDistribution::Kind::Normal: {
      if (p == 0.0) return delta == 0.0 ? inf : 0.0;
      const double z = delta / p;
      return std::exp(-0.5 * z * z) / (p * std::sqrt(2.0 * std::numbers::pi));
    }
  }
  return 0.0;
}

[[nodiscard]] inline double variance(const RegularErrorDistribution& dist) {
  const double p = dist.parameter();
  switch (dist.kind()) {
    case RegularErrorDistribution::Kind::ArcsineCyclic: return p * p / 2.0;
    case RegularErrorDistribution::Kind::UniformRounding: return p * p / 3.0;
    case RegularErrorDistribution::Kind::Normal: return p * p;
  }
  return 0.0;
}

/// Every regular error has zero expectation over its possible values.
[[nodiscard]] constexpr double expectation(const RegularErrorDistribution&) noexcept {
  return 0.0;
}

/// One draw. Arcsine values come from the generating mechanism A·sin(u),
/// u uniform on [0, 2π), rather than from an inverse CDF.
[[nodiscard]] inline double draw(const RegularErrorDistribution& dist, Rng& rng) {
  const double p = dist.parameter();
  switch (dist.kind()) {
    case RegularErrorDistribution::Kind::ArcsineCyclic:
      return p * std::sin(2.0 * std::numbers::pi * rng.uniform());
    case RegularErrorDistribution::Kind::UniformRounding:
      return rng.uniform(-p, p);
    case RegularErrorDistribution::Kind::Normal:
      return p * rng.normal();
  }
  return 0.0;
}

/// `count` deterministic draws for a given seed.
[[nodiscard]] inline ErrorSequence sample(const RegularErrorDistribution& dist, std::size_t count,
                                          std::uint64_t seed) {
  if (count == 0) throw InputError("sample: count must be >= 1");
  Rng rng(seed);
  std::vector<double> values(count);
  for (auto& v : values) v = draw(dist, rng);
  return ErrorSequence(std::move(values), std::string(to_string(dist.kind())) + " samples");
}

/// What the variance is measured about.
enum class Center {
  Zero,        ///< values are errors, whose expectation is 0
  SampleMean,  ///< values are generic data
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean Σx/n and variance Σ(x − c)²/n with divisor n (not n − 1).
///
/// Sums are accumulated relative to the first sample, so a constant
/// sequence yields its value as mean and exactly 0 as variance.
[[nodiscard]] inline Moments empirical_moments(const ErrorSequence& samples,
                                               Center center = Center::Zero) {
  if (samples.empty()) throw InputError("empirical_moments: empty sample");
  const auto& x = samples.values;
  const double n = static_cast<double>(x.size());
  const double origin = x.front();
  double shifted = 0.0;
  for (double v : x) shifted += v - origin;
  const double mean = origin + shifted / n;

  double ss = 0.0;
  if (center == Center::Zero) {
    for (double v : x) ss += v * v;
  } else {
    const double offset = shifted / n;
    for (double v : x) {
      const double d = (v - origin) - offset;
      ss += d * d;
    }
  }
  return {mean, ss / n};
}

}  // namespace errprop
