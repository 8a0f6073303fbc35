#include <errprop/montecarlo.hpp>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include <cmath>
#include <vector>

namespace errprop {
namespace {

Vector vec(std::initializer_list<double> v) { return to_vector(std::vector<double>(v)); }

ErrorBudget steelyard_budget(double sa, double sb, double sc) {
  return ErrorBudget({ErrorSource::zero_point(sa), ErrorSource::proportional(sb),
                      ErrorSource::scale_nonuniformity(sc)});
}

CampaignSpec steelyard_spec(std::size_t trials, std::uint64_t seed) {
  return CampaignSpec{DesignMatrix(fixture::steelyard_design()), vec({12.3, 25.1, 7.8}),
                      steelyard_budget(0.1, 0.001, 0.05), RegularErrorDistribution::normal(0.0),
                      trials, seed};
}

TEST(CampaignSpec, Validation) {
  auto s = steelyard_spec(0, 1);
  EXPECT_THROW(s.validate(), InputError);
  s.trials = 10;
  s.true_values = vec({1, 2});
  EXPECT_THROW((void)simulate(s), InputError);
  s = steelyard_spec(10, 1);
  s.budget = ErrorBudget({ErrorSource::custom(1.0, {1, 2, 3})});
  EXPECT_THROW((void)simulate(s), InputError);
}

TEST(Simulate, NoiselessCampaignIsExact) {
  CampaignSpec s{DesignMatrix(fixture::steelyard_design()), vec({1.5, -2.0, 3.25}),
                 steelyard_budget(0, 0, 0), RegularErrorDistribution::normal(0.0), 100, 9};
  const auto out = simulate(s);
  for (Index k = 0; k < 100; ++k) {
    ASSERT_EQ(out.solutions.row(k).transpose(), s.true_values);
    ASSERT_TRUE(out.residuals.row(k).isZero(0.0));
    ASSERT_EQ(out.sigma_unit(k), 0.0);
  }
}

TEST(Simulate, NoiselessCampaignArbitraryTruthWithinRounding) {
  auto s = steelyard_spec(50, 3);
  s.budget = steelyard_budget(0, 0, 0);
  const auto out = simulate(s);
  for (Index k = 0; k < 50; ++k) {
    ASSERT_LE((out.solutions.row(k).transpose() - s.true_values).cwiseAbs().maxCoeff(), 1e-13);
    ASSERT_LE(out.residuals.row(k).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Simulate, DirectModelRecoversTypeA) {
  CampaignSpec s{DesignMatrix::ones(25), vec({100.0}), ErrorBudget{},
                 RegularErrorDistribution::normal(1.0), 10'000, 2024};
  const auto out = simulate(s);
  const Vector e = out.solutions.col(0).array() - 100.0;
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().mean());
  EXPECT_NEAR(sd, 0.2, 0.05 * 0.2);
  EXPECT_NEAR(out.sigma_unit.mean(), 1.0, 0.03);
}

TEST(Simulate, DeterministicAcrossRunsAndThreadCounts) {
  auto s = steelyard_spec(20'000, 77);
  s.noise = RegularErrorDistribution::arcsine_cyclic(0.02);
  SimulationOptions one{1}, four{4}, seven{7};
  const auto a = simulate(s, one);
  const auto b = simulate(s, one);
  const auto c = simulate(s, four);
  const auto d = simulate(s, seven);
  for (const auto* o : {&b, &c, &d}) {
    EXPECT_EQ(a.observations, o->observations);
    EXPECT_EQ(a.solutions, o->solutions);
    EXPECT_EQ(a.residuals, o->residuals);
    EXPECT_EQ(a.sigma_unit, o->sigma_unit);
  }
  const auto sa = summarize(s, one);
  const auto sb = summarize(s, seven);
  EXPECT_EQ(sa.mean_solution, sb.mean_solution);
  EXPECT_EQ(sa.solution_error_covariance, sb.solution_error_covariance);
  EXPECT_EQ(sa.mean_sigma_unit, sb.mean_sigma_unit);

  s.seed = 78;
  EXPECT_NE(simulate(s, one).observations, a.observations);
}

TEST(Simulate, SummaryAgreesWithFullRecords) {
  const auto s = steelyard_spec(5'000, 12);
  const auto full = simulate(s);
  const auto sum = summarize(s);
  const Matrix err = full.solutions.rowwise() - s.true_values.transpose();
  EXPECT_LE((sum.solution_error_covariance - err.transpose() * err / 5000.0).cwiseAbs().maxCoeff(),
            1e-15);
  EXPECT_NEAR(sum.mean_sigma_unit, full.sigma_unit.mean(), 1e-15);
  EXPECT_EQ(sum.degrees_of_freedom, 3);
}

TEST(Simulate, SharedZeroPointLeaksIntoSolutionOnly) {
  const double truth = 10.0, sigma = 0.7;
  CampaignSpec s{DesignMatrix::ones(6), vec({truth}), ErrorBudget({ErrorSource::zero_point(sigma)}),
                 RegularErrorDistribution::normal(0.0), 3'000, 555};
  const auto out = simulate(s);
  for (Index k = 0; k < out.observations.rows(); ++k) {
    ASSERT_TRUE(out.residuals.row(k).isZero(0.0)) << k;
    const double drawn = out.observations(k, 0) - truth;
    ASSERT_TRUE((out.observations.row(k).array() == out.observations(k, 0)).all());
    ASSERT_EQ(out.solutions(k, 0) - truth, drawn);
  }
  // First trial: the shared value is the first normal of chunk 0's stream.
  Rng rng(chunk_seed(555, 0));
  EXPECT_EQ(out.observations(0, 0), truth + sigma * rng.normal());
}

TEST(Simulate, SteelyardMatchesAnalyticPropagation) {
  const auto s = steelyard_spec(1'000'000, 20240917);
  const auto summary = summarize(s);
  const auto analytic = analytic_solution_covariance(s);
  // The analytic reference is the fixed solution map applied to the budget covariance.
  const auto reference = propagate(
      LinearMap(fixture::steelyard_solution_map()),
      observation_covariance(s.budget, fixture::steelyard_design() * s.true_values));
  EXPECT_LE((analytic.matrix() - reference.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      const double a = analytic(i, j);
      const double tol = std::abs(a) < 1e-4 ? 1e-4 : 0.03 * std::abs(a);
      EXPECT_NEAR(summary.solution_error_covariance(i, j), a, tol) << i << "," << j;
    }
}

TEST(SampleObservationErrors, ConvergesWithinThreeStandardErrors) {
  const Vector x = fixture::steelyard_design() * vec({12.3, 25.1, 7.8});
  const auto budget = steelyard_budget(0.1, 0.004, 0.05);
  const std::size_t m = 1'000'000;
  const Matrix draws =
      sample_observation_errors(budget, RegularErrorDistribution::normal(0.0), x, m, 31);
  const auto emp = empirical_covariance(draws);
  const auto d = observation_covariance(budget, x);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) {
      // Gaussian errors: Var(e_i e_j) = σ_ii σ_jj + σ_ij².
      const double se = std::sqrt((d(i, i) * d(j, j) + d(i, j) * d(i, j)) / double(m));
      EXPECT_NEAR(emp(i, j), d(i, j), 3.0 * se) << i << "," << j;
    }
}

TEST(EmpiricalCovariance, IdenticalConstantVectorsGiveZero) {
  std::vector<Vector> s(5, vec({0.1, -3.3, 7.0}));
  EXPECT_TRUE(empirical_covariance(s, Center::SampleMean).matrix().isZero(0.0));
}

TEST(EmpiricalCovariance, HandComputation) {
  const auto c = empirical_covariance(std::vector<Vector>{vec({1, 1}), vec({-1, -1})});
  EXPECT_EQ(c.matrix(), Matrix::Ones(2, 2));
}

TEST(EmpiricalCovariance, Errors) {
  EXPECT_THROW((void)empirical_covariance(std::vector<Vector>{vec({1, 2}), vec({1})}), InputError);
  EXPECT_THROW((void)empirical_covariance(std::vector<Vector>{vec({1, 2})}), InputError);
  EXPECT_THROW((void)empirical_covariance(std::vector<Vector>{}), InputError);
}

TEST(EmpiricalCovariance, PlantedCommonComponent) {
  oracle::StdNormal normal(1618);
  const int m = 1'000'000;
  Matrix rows(m, 2);
  for (int t = 0; t < m; ++t) {
    const double k = normal(1.0);
    rows(t, 0) = k + normal(2.0);
    rows(t, 1) = k + normal(3.0);
  }
  const auto c = empirical_covariance(rows);
  EXPECT_NEAR(c(0, 1), 1.0, 0.02);
  EXPECT_NEAR(c(0, 0), 5.0, 0.1);
  EXPECT_NEAR(c(1, 1), 10.0, 0.2);
}

TEST(EmpiricalCovariance, ErrorShrinksAsInverseRootTrials) {
  const Vector x = fixture::steelyard_design() * vec({12.3, 25.1, 7.8});
  const auto budget = steelyard_budget(0.1, 0.004, 0.05);
  const Matrix truth = observation_covariance(budget, x).matrix();
  const std::vector<std::size_t> sizes{1'000, 10'000, 100'000, 1'000'000};
  const int replicates = 6;

  std::vector<double> lx, ly;
  for (std::size_t m : sizes) {
    double ms = 0.0;
    for (int r = 0; r < replicates; ++r) {
      const Matrix draws = sample_observation_errors(
          budget, RegularErrorDistribution::normal(0.0), x, m, 1000 * m + r);
      const double e = (empirical_covariance(draws).matrix() - truth).norm() / truth.norm();
      ms += e * e;
    }
    lx.push_back(std::log10(double(m)));
    ly.push_back(std::log10(std::sqrt(ms / replicates)));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0;
  const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  const double slope = sxy / sxx;
  EXPECT_NEAR(slope, -0.5, 0.15);
  for (std::size_t k = 1; k < ly.size(); ++k) EXPECT_LT(ly[k], ly[k - 1]);
}

}  // namespace
}  // namespace errprop
