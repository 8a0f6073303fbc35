#include <errprop/error_model.hpp>
#include <errprop/propagation.hpp>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

namespace errprop {
namespace {

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

/// B·Bᵀ with B possibly rank-deficient, symmetrized so it passes validation.
CovarianceMatrix random_psd(std::mt19937_64& rng, Index dim) {
  std::uniform_int_distribution<Index> rank(1, dim + 2);
  const Matrix b = random_matrix(rng, dim, rank(rng));
  return CovarianceMatrix(symmetrized(b * b.transpose()));
}

double rel_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return scale == 0.0 ? 0.0 : (a - b).cwiseAbs().maxCoeff() / scale;
}

TEST(LinearMap, Validation) {
  EXPECT_THROW(LinearMap(Matrix(0, 2)), InputError);
  EXPECT_THROW(LinearMap(Matrix::Ones(2, 2), Vector::Zero(3)), InputError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = INFINITY;
  EXPECT_THROW(LinearMap{bad}, InputError);
  const LinearMap m(Matrix::Identity(2, 2), (Vector(2) << 1, 2).finished());
  EXPECT_EQ(m.apply(Vector::Ones(2)), (Vector(2) << 2, 3).finished());
}

TEST(Propagate, IdentityLeavesCovarianceUnchanged) {
  const CovarianceMatrix d(from_rows({{4, 1, 0}, {1, 9, -2}, {0, -2, 1}}));
  EXPECT_EQ(propagate(Matrix::Identity(3, 3), d).matrix(), d.matrix());
}

TEST(Propagate, SumOfIndependentComponents) {
  const auto d = propagate(Matrix::Ones(1, 2), CovarianceMatrix::diagonal((Vector(2) << 9, 16).finished()));
  EXPECT_EQ(d.dim(), 1);
  EXPECT_EQ(d(0, 0), 25.0);
}

TEST(Propagate, DimensionMismatch) {
  EXPECT_THROW((void)propagate(Matrix::Ones(2, 3), CovarianceMatrix::zero(2)), InputError);
}

TEST(Propagate, OffsetIgnored) {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 200; ++c) {
    const Matrix k = random_matrix(rng, 3, 4);
    const auto d = random_psd(rng, 4);
    const Vector off = random_matrix(rng, 3, 1).col(0) * 1e6;
    ASSERT_EQ(propagate(LinearMap(k, off), d).matrix(), propagate(LinearMap(k), d).matrix());
  }
}

TEST(Propagate, SteelyardMatchesMonteCarlo) {
  // Campaign errors drawn here with the standard library, mapped by the reference solution map.
  const Matrix a = fixture::steelyard_design();
  const Matrix k = fixture::steelyard_solution_map();
  const Vector x = a * (Vector(3) << 12.3, 25.1, 7.8).finished();
  const double sa = 0.1, sb = 0.001, sc = 0.05;
  const ErrorBudget budget({ErrorSource::zero_point(sa), ErrorSource::proportional(sb),
                            ErrorSource::scale_nonuniformity(sc)});
  const auto analytic = propagate(LinearMap(k), observation_covariance(budget, x));

  oracle::StdNormal normal(4242);
  const int trials = 1'000'000;
  Matrix acc = Matrix::Zero(3, 3);
  Vector e(6);
  for (int t = 0; t < trials; ++t) {
    const double za = normal(sa), zb = normal(sb);
    for (Index i = 0; i < 6; ++i) e(i) = za + zb * x(i) + normal(sc);
    const Vector dy = k * e;
    acc.noalias() += dy * dy.transpose();
  }
  acc /= trials;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      EXPECT_NEAR(acc(i, j), analytic(i, j), 0.03 * std::abs(analytic(i, j))) << i << "," << j;
}

TEST(PropagateProperty, SymmetricPsdLinearAndComposable) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<Index> dim(1, 8);
  for (int c = 0; c < 1000; ++c) {
    const Index n = dim(rng), m = dim(rng), p = dim(rng);
    const Matrix k1 = random_matrix(rng, m, n);
    const Matrix k2 = random_matrix(rng, p, m);
    const auto d1 = random_psd(rng, n);
    const auto d2 = random_psd(rng, n);

    // The constructor enforces exact symmetry and PSD within tolerance.
    const auto out = propagate(k1, d1);
    ASSERT_EQ(out.matrix(), out.matrix().transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(out.matrix());
    ASSERT_GE(eig.eigenvalues().minCoeff(), -1e-9 * std::max(1.0, eig.eigenvalues().maxCoeff()));

    const Matrix lin = propagate(k1, d1 + d2).matrix();
    const Matrix sum = propagate(k1, d1).matrix() + propagate(k1, d2).matrix();
    ASSERT_LE(rel_error(lin, sum), 1e-12) << "linearity, case " << c;

    const Matrix nested = propagate(k2, propagate(k1, d1)).matrix();
    const Matrix direct = propagate(Matrix(k2 * k1), d1).matrix();
    ASSERT_LE(rel_error(nested, direct), 1e-12) << "composition, case " << c;
  }
}

TEST(Synthesize, SingleComponent) {
  EXPECT_EQ(synthesize(0.0, 5.0).total, 5.0);
  EXPECT_EQ(synthesize(5.0, 0.0).total, 5.0);
}

TEST(Synthesize, Quadrature) {
  const auto r = synthesize(3.0, 4.0);
  EXPECT_EQ(r.total, 5.0);
  EXPECT_EQ(r.covariance, 0.0);
  EXPECT_EQ(r.true_value_variance, 25.0);
}

TEST(Synthesize, CauchySchwarzBound) {
  SynthesisOptions o;
  o.covariance = 12.5;
  EXPECT_THROW((void)synthesize(3.0, 4.0, o), InputError);
  o.covariance = -12.0;
  EXPECT_EQ(synthesize(3.0, 4.0, o).total, 1.0);
  o.covariance = 12.0;
  EXPECT_EQ(synthesize(3.0, 4.0, o).total, 7.0);
  EXPECT_THROW((void)synthesize(-1.0, 4.0), InputError);
}

TEST(Synthesize, CoverageAndTrueValue) {
  SynthesisOptions o;
  o.coverage_factor = 2.0;
  o.measured_value = 10.5;
  const auto r = synthesize(3.0, 4.0, o);
  EXPECT_EQ(r.expanded, 10.0);
  EXPECT_EQ(r.true_value_expectation, 10.5);
  EXPECT_EQ(r.true_value_variance, 25.0);
  o.coverage_factor = 0.0;
  EXPECT_THROW((void)synthesize(3.0, 4.0, o), InputError);
}

TEST(Synthesize, EqualsScalarPropagationExactly) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 10.0), r(-1.0, 1.0);
  for (int c = 0; c < 1000; ++c) {
    const double a = u(rng), b = u(rng);
    const double cov = r(rng) * a * b;
    SynthesisOptions o;
    o.covariance = cov;
    const auto rep = synthesize(a, b, o);
    const auto p = propagate(Matrix::Ones(1, 2), CovarianceMatrix(from_rows({{a * a, cov}, {cov, b * b}})));
    ASSERT_EQ(rep.total, std::sqrt(p(0, 0)));
  }
}

TEST(Synthesize, CorrelatedComponentsMatchMonteCarlo) {
  // δ = k + p, ε = k + q with σ_k = 1, σ_p = 2, σ_q = 3.
  oracle::StdNormal normal(2718);
  const int trials = 1'000'000;
  double ss = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double k = normal(1.0), p = normal(2.0), q = normal(3.0);
    const double s = (k + p) + (k + q);
    ss += s * s;
  }
  SynthesisOptions o;
  o.covariance = co_uncertainty(1.0);
  const auto r = synthesize(std::sqrt(5.0), std::sqrt(10.0), o);
  EXPECT_DOUBLE_EQ(r.total, std::sqrt(17.0));
  EXPECT_NEAR(std::sqrt(ss / trials), r.total, 0.02 * r.total);
}

TEST(ExpandedToStandard, ResistorCertificate) {
  // 129 µΩ quoted with k = 2.58.
  const auto s = expanded_to_standard(129.0, 2.58);
  EXPECT_EQ(s.sigma, 50.0);
  EXPECT_EQ(s.variance, 2500.0);
  const auto ohm = expanded_to_standard(129e-6, 2.58);
  EXPECT_NEAR(ohm.sigma, 50e-6, 1e-20);
  EXPECT_NEAR(ohm.variance, 2.5e-9, 1e-24);
}

TEST(ExpandedToStandard, TrivialFactors) {
  EXPECT_EQ(expanded_to_standard(7.25, 1.0).sigma, 7.25);
  EXPECT_EQ(expanded_to_standard(100.0, 2.0).sigma, 50.0);
  EXPECT_THROW((void)expanded_to_standard(1.0, 0.0), InputError);
  EXPECT_THROW((void)expanded_to_standard(1.0, -2.0), InputError);
}

TEST(TrueValueExpression, ResistorTable) {
  const auto tv = true_value_expression(10.000742, 50e-6);
  EXPECT_EQ(tv.measured_value.expectation, 10.000742);
  EXPECT_EQ(tv.measured_value.variance, 0.0);
  EXPECT_EQ(tv.error.expectation, 0.0);
  EXPECT_NEAR(tv.error.variance, 2.5e-9, 1e-24);
  EXPECT_EQ(tv.true_value.expectation, 10.000742);
  EXPECT_EQ(tv.true_value.variance, tv.error.variance);
}

TEST(TrueValueExpression, ExactMeasurement) {
  const auto tv = true_value_expression(3.5, 0.0);
  EXPECT_EQ(tv.true_value.expectation, 3.5);
  EXPECT_EQ(tv.true_value.variance, 0.0);
  EXPECT_THROW((void)true_value_expression(1.0, -1.0), InputError);
}

TEST(TrueValueExpression, MeasuredValueColumnAlwaysConstant) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int c = 0; c < 100; ++c) {
    const double x0 = g(rng);
    const auto tv = true_value_expression(x0, std::abs(g(rng)));
    ASSERT_EQ(tv.measured_value.expectation, x0);
    ASSERT_EQ(tv.measured_value.variance, 0.0);
  }
}

}  // namespace
}  // namespace errprop
