/**
 * @file montecarlo.hpp
 * @brief Simulation of complete measurement campaigns with planted error structure.
 *
 * A trial is one whole campaign under one realized measurement condition:
 * shared error sources are drawn once per trial, independent sources and the
 * noise distribution once per observation. The observation vector
 * X = A·Y_true + ΔX is then adjusted with the same least-squares solver as
 * real data.
 *
 * Trials are processed in fixed-size chunks. Chunk c draws from
 * Rng(chunk_seed(seed, c)) and results are merged in chunk order, so the
 * output is bit-identical for any number of worker threads.
 */
#pragma once

#include <errprop/adjustment.hpp>
#include <errprop/distributions.hpp>
#include <errprop/error_model.hpp>
#include <errprop/errors.hpp>
#include <errprop/linalg.hpp>
#include <errprop/propagation.hpp>
#include <errprop/random.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace errprop {

struct CampaignSpec {
  DesignMatrix design;
  Vector true_values;
  ErrorBudget budget;
  RegularErrorDistribution noise = RegularErrorDistribution::normal(0.0);
  std::size_t trials = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (trials < 1) throw InputError("campaign: trials must be >= 1");
    if (true_values.size() != design.cols())
      throw InputError("campaign: " + std::to_string(true_values.size()) +
                       " true values for a design with " + std::to_string(design.cols()) +
                       " columns");
    if (!true_values.allFinite()) throw InputError("campaign: non-finite true values");
    budget.check_applicable(static_cast<std::size_t>(design.rows()));
  }

  /// Noise-free observations A·Y_true. Proportional sources scale with these.
  [[nodiscard]] Vector true_observations() const { return design.matrix() * true_values; }
};

struct SimulationOptions {
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Trials per seeded chunk. Part of the reproducibility contract: changing
  /// it changes the streams.
  std::size_t chunk_size = 4096;
};

/// Per-trial records, one row per trial.
struct CampaignTrials {
  Matrix observations;  ///< trials × n
  Matrix solutions;     ///< trials × t
  Matrix residuals;     ///< trials × n
  Vector sigma_unit;    ///< trials
};

/// Streaming statistics of a campaign; memory does not grow with trials.
struct CampaignSummary {
  std::size_t trials = 0;
  Vector mean_solution;
  /// Σ(Y − Y_true)(Y − Y_true)ᵀ / trials: empirical D(ΔY) about zero.
  Matrix solution_error_covariance;
  double mean_sigma_unit = 0.0;
  int degrees_of_freedom = 0;
};

namespace detail {

/// Draws the full error vector of one campaign. Budget sources are normal
/// with their declared sigma.
inline Vector draw_campaign_errors(const ErrorBudget& budget,
                                   const RegularErrorDistribution& noise,
                                   const Vector& magnitudes, Rng& rng) {
  const Index n = magnitudes.size();
  std::vector<Vector> draws;
  draws.reserve(budget.size());
  for (const auto& s : budget.sources()) {
    Vector d(s.shared() ? 1 : n);
    for (Index i = 0; i < d.size(); ++i) d(i) = s.sigma * rng.normal();
    draws.push_back(std::move(d));
  }
  Vector err = compose_errors(budget, draws, magnitudes);
  for (Index i = 0; i < n; ++i) err(i) += draw(noise, rng);
  return err;
}

inline Vector draw_campaign_errors(const CampaignSpec& spec, const Vector& magnitudes, Rng& rng) {
  return draw_campaign_errors(spec.budget, spec.noise, magnitudes, rng);
}

/// Runs body(chunk_index, first_trial, trial_count) for every chunk on a small thread pool.
template <typename Body>
void for_each_chunk(std::size_t trials, const SimulationOptions& options, Body&& body) {
  const std::size_t chunk = std::max<std::size_t>(options.chunk_size, 1);
  const std::size_t chunks = (trials + chunk - 1) / chunk;
  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, chunks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
      try {
        const std::size_t first = c * chunk;
        body(c, first, std::min(chunk, trials - first));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = chunks;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Observation error vectors ΔX of `trials` campaigns, one row each, drawn
/// with the same chunked streams as simulate().
[[nodiscard]] inline Matrix sample_observation_errors(
    const ErrorBudget& budget, const RegularErrorDistribution& noise, const Vector& magnitudes,
    std::size_t trials, std::uint64_t seed, const SimulationOptions& options = {}) {
  if (trials < 1) throw InputError("sample_observation_errors: trials must be >= 1");
  if (magnitudes.size() == 0 || !magnitudes.allFinite())
    throw InputError("sample_observation_errors: magnitudes must be non-empty and finite");
  budget.check_applicable(static_cast<std::size_t>(magnitudes.size()));
  Matrix out(static_cast<Index>(trials), magnitudes.size());
  detail::for_each_chunk(trials, options, [&](std::size_t c, std::size_t first, std::size_t count) {
    Rng rng(chunk_seed(seed, c));
    for (std::size_t k = 0; k < count; ++k)
      out.row(static_cast<Index>(first + k)) =
          detail::draw_campaign_errors(budget, noise, magnitudes, rng).transpose();
  });
  return out;
}

/// Simulates every trial and keeps the full per-trial records.
[[nodiscard]] inline CampaignTrials simulate(const CampaignSpec& spec,
                                             const SimulationOptions& options = {}) {
  spec.validate();
  const LeastSquares solver(spec.design);
  const Vector magnitudes = spec.true_observations();
  const auto trials = static_cast<Index>(spec.trials);
  const Index n = spec.design.rows();
  const Index t = spec.design.cols();

  CampaignTrials out{Matrix(trials, n), Matrix(trials, t), Matrix(trials, n), Vector(trials)};
  detail::for_each_chunk(spec.trials, options,
                         [&](std::size_t c, std::size_t first, std::size_t count) {
    Rng rng(chunk_seed(spec.seed, c));
    for (std::size_t k = 0; k < count; ++k) {
      const auto row = static_cast<Index>(first + k);
      const Vector x = magnitudes + detail::draw_campaign_errors(spec, magnitudes, rng);
      const auto fit = solver.fit(x);
      out.observations.row(row) = x.transpose();
      out.solutions.row(row) = fit.measured_values.transpose();
      out.residuals.row(row) = fit.residuals.transpose();
      out.sigma_unit(row) = fit.sigma_unit;
    }
  });
  return out;
}

/// Same trials as simulate(), reduced on the fly to solution-error statistics.
[[nodiscard]] inline CampaignSummary summarize(const CampaignSpec& spec,
                                               const SimulationOptions& options = {}) {
  spec.validate();
  const LeastSquares solver(spec.design);
  const Vector magnitudes = spec.true_observations();
  const Index t = spec.design.cols();
  const std::size_t chunk = std::max<std::size_t>(options.chunk_size, 1);
  const std::size_t chunks = (spec.trials + chunk - 1) / chunk;

  struct Partial {
    Vector error_sum;
    Matrix outer_sum;
    double sigma_sum = 0.0;
  };
  std::vector<Partial> partials(chunks);
  detail::for_each_chunk(spec.trials, options,
                         [&](std::size_t c, std::size_t, std::size_t count) {
    Rng rng(chunk_seed(spec.seed, c));
    Partial p{Vector::Zero(t), Matrix::Zero(t, t), 0.0};
    for (std::size_t k = 0; k < count; ++k) {
      const Vector x = magnitudes + detail::draw_campaign_errors(spec, magnitudes, rng);
      const auto fit = solver.fit(x);
      const Vector e = fit.measured_values - spec.true_values;
      p.error_sum += e;
      p.outer_sum.noalias() += e * e.transpose();
      p.sigma_sum += fit.sigma_unit;
    }
    partials[c] = std::move(p);
  });

  Vector error_sum = Vector::Zero(t);
  Matrix outer_sum = Matrix::Zero(t, t);
  double sigma_sum = 0.0;
  for (const auto& p : partials) {
    error_sum += p.error_sum;
    outer_sum += p.outer_sum;
    sigma_sum += p.sigma_sum;
  }
  const double m = static_cast<double>(spec.trials);
  CampaignSummary s;
  s.trials = spec.trials;
  s.mean_solution = spec.true_values + error_sum / m;
  s.solution_error_covariance = symmetrized(outer_sum / m);
  s.mean_sigma_unit = sigma_sum / m;
  s.degrees_of_freedom = solver.degrees_of_freedom();
  return s;
}

/// Analytic D(ΔY) of a campaign: the solution map applied to the budget's
/// D(ΔX) plus the independent noise variance on the diagonal.
[[nodiscard]] inline CovarianceMatrix analytic_solution_covariance(const CampaignSpec& spec) {
  spec.validate();
  const LeastSquares solver(spec.design);
  const Vector magnitudes = spec.true_observations();
  const CovarianceMatrix d_obs =
      observation_covariance(spec.budget, magnitudes) +
      CovarianceMatrix::diagonal(Vector::Constant(magnitudes.size(), variance(spec.noise)));
  return propagate(solver.solution_map(), d_obs);
}

/// (1/m)·Σ(ΔX − c)(ΔX − c)ᵀ over m sample rows, with c = 0 for errors or the
/// sample mean. Divisor m, not m − 1.
[[nodiscard]] inline CovarianceMatrix empirical_covariance(const Matrix& samples,
                                                           Center center = Center::Zero) {
  if (samples.rows() < 2) throw InputError("empirical_covariance: need at least 2 samples");
  if (samples.cols() < 1) throw InputError("empirical_covariance: samples have no components");
  if (!samples.allFinite()) throw InputError("empirical_covariance: non-finite samples");
  const double m = static_cast<double>(samples.rows());
  Matrix centered;
  if (center == Center::Zero) {
    centered = samples;
  } else {
    // Relative to the first row so that identical rows centre to exact zeros.
    const Matrix shifted = samples.rowwise() - samples.row(0);
    const Eigen::RowVectorXd offset = shifted.colwise().sum() / m;
    centered = shifted.rowwise() - offset;
  }
  return CovarianceMatrix(symmetrized(centered.transpose() * centered / m));
}

[[nodiscard]] inline CovarianceMatrix empirical_covariance(const std::vector<Vector>& samples,
                                                           Center center = Center::Zero) {
  if (samples.empty()) throw InputError("empirical_covariance: need at least 2 samples");
  const Index dim = samples.front().size();
  Matrix rows(static_cast<Index>(samples.size()), dim);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].size() != dim)
      throw InputError("empirical_covariance: sample " + std::to_string(k) + " has dimension " +
                       std::to_string(samples[k].size()) + ", expected " + std::to_string(dim));
    rows.row(static_cast<Index>(k)) = samples[k].transpose();
  }
  return empirical_covariance(rows, center);
}

}  // namespace errprop
