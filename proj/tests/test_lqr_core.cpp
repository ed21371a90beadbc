#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tsod/constraint_sets.hpp"
#include "tsod/riccati.hpp"

namespace {

using namespace tsod;
using tsod::testing::benchmark_costs;
using tsod::testing::benchmark_theta_sim;
using tsod::testing::benchmark_theta_star;

Theta scalar_theta(double a, double b) {
  return Theta(Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b));
}

Costs scalar_costs(double q, double r) {
  return Costs(Eigen::MatrixXd::Constant(1, 1, q), Eigen::MatrixXd::Constant(1, 1, r));
}

// Positive root of b^2 p^2 + (r(1 - a^2) - q b^2) p - q r = 0.
double scalar_p_closed_form(double a, double b, double q, double r) {
  const double lin = r * (1.0 - a * a) - q * b * b;
  return (-lin + std::sqrt(lin * lin + 4.0 * b * b * q * r)) / (2.0 * b * b);
}

// Plain value iteration written out with explicit inverses.
Eigen::MatrixXd reference_riccati(const Theta& theta, const Costs& costs, int iters) {
  const Eigen::MatrixXd& a = theta.a();
  const Eigen::MatrixXd& b = theta.b();
  Eigen::MatrixXd p = costs.q();
  for (int i = 0; i < iters; ++i) {
    const Eigen::MatrixXd s = costs.r() + b.transpose() * p * b;
    p = costs.q() + a.transpose() * p * a -
        a.transpose() * p * b * s.inverse() * b.transpose() * p * a;
  }
  return p;
}

double power_iteration_norm(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd g = m.transpose() * m;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g.cols());
  double lambda = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd w = g * v;
    if (w.norm() == 0.0) return 0.0;
    lambda = v.dot(w) / v.squaredNorm();
    v = w / w.norm();
  }
  return std::sqrt(lambda);
}

TEST(SolveDare, ZeroDynamicsGivesCostMatrix) {
  const Theta theta(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3));
  const auto sol = solve_dare(theta, Costs::identity(3, 3));
  EXPECT_TRUE(sol.p_matrix.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
  EXPECT_EQ(sol.gain.norm(), 0.0);
  EXPECT_DOUBLE_EQ(sol.avg_cost, 3.0);
}

TEST(SolveDare, ScalarMatchesClosedFormRoot) {
  const auto sol = solve_dare(scalar_theta(0.5, 1.0), scalar_costs(1.0, 1.0));
  const double p = (0.25 + std::sqrt(4.0625)) / 2.0;
  EXPECT_NEAR(sol.p_matrix(0, 0), p, 1e-9);
  EXPECT_NEAR(sol.p_matrix(0, 0), 1.132782, 1e-6);
  EXPECT_NEAR(sol.gain(0, 0), -p * 0.5 / (1.0 + p), 1e-9);
  EXPECT_NEAR(sol.gain(0, 0), -0.265565, 1e-6);
}

TEST(SolveDare, BenchmarkMatchesLongReferenceIteration) {
  const Theta theta = benchmark_theta_star();
  const Costs costs = benchmark_costs();
  const auto sol = solve_dare(theta, costs);
  EXPECT_LE(riccati_residual(theta, costs, sol.p_matrix), 1e-10);
  const Eigen::MatrixXd ref = reference_riccati(theta, costs, 10 * sol.iterations);
  EXPECT_NEAR(sol.avg_cost, ref.trace(), 1e-8);
  EXPECT_LE((sol.p_matrix - ref).norm(), 1e-8);
}

TEST(SolveDare, UncontrollableUnstableThrows) {
  EXPECT_THROW(solve_dare(scalar_theta(2.0, 0.0), scalar_costs(1.0, 1.0)), NonStabilizable);
}

TEST(SolveDare, RejectsBadArguments) {
  const Theta theta = scalar_theta(0.5, 1.0);
  EXPECT_THROW(solve_dare(theta, scalar_costs(1.0, 1.0), 0.0), DomainError);
  EXPECT_THROW(solve_dare(theta, scalar_costs(1.0, 1.0), 1e-10, 0), DomainError);
  EXPECT_THROW(solve_dare(theta, Costs::identity(2, 1)), DimensionMismatch);
}

TEST(SolveDare, FixedPointAndGainConsistencyOnRandomSystems) {
  RngStream rng(11, 0);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 4.0);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform() * 4.0);
    Eigen::MatrixXd a = rng.normal_matrix(n, n);
    const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
    a *= (0.3 + 0.9 * rng.uniform()) / radius;
    const Theta theta(a, rng.normal_matrix(n, m));
    const Costs costs = Costs::identity(n, m);
    const auto sol = solve_dare(theta, costs);
    ++solved;
    EXPECT_LE(riccati_residual(theta, costs, sol.p_matrix), 1e-10);
    const Eigen::MatrixXd k = -(costs.r() + theta.b().transpose() * sol.p_matrix * theta.b())
                                   .inverse() *
                              theta.b().transpose() * sol.p_matrix * theta.a();
    EXPECT_LE((k - sol.gain).norm(), 1e-10);
    EXPECT_DOUBLE_EQ(sol.avg_cost, sol.p_matrix.trace());
    EXPECT_LE((sol.p_matrix - sol.p_matrix.transpose()).norm(), 1e-12);
  }
  EXPECT_EQ(solved, 60);
}

TEST(SolveDare, GainShrinksAsControlCostGrows) {
  const double a = 0.9, b = 1.0, q = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const double r = 0.1 * std::pow(1.5, i);
    const auto sol = solve_dare(scalar_theta(a, b), scalar_costs(q, r));
    const double p = scalar_p_closed_form(a, b, q, r);
    EXPECT_NEAR(sol.p_matrix(0, 0), p, 1e-8 * std::max(1.0, p));
    const double k = std::abs(sol.gain(0, 0));
    EXPECT_LT(k, previous);
    previous = k;
  }
}

TEST(ClosedLoopNorm, Examples) {
  const Theta zero(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(closed_loop_norm(zero, Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3))), 0.0);

  const Theta half(0.5 * Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR(closed_loop_norm(half, Eigen::MatrixXd(-0.5 * Eigen::MatrixXd::Identity(2, 2))), 0.0, 1e-15);

  const Theta theta = benchmark_theta_star();
  const auto sol = solve_dare(theta, benchmark_costs());
  const double norm = closed_loop_norm(theta, sol.gain);
  EXPECT_NEAR(norm, power_iteration_norm(theta.a() + theta.b() * sol.gain), 1e-9);
  EXPECT_LT(norm, 1.0);
}

TEST(ClosedLoopNorm, DimensionMismatchThrows) {
  const Theta theta = benchmark_theta_star();
  EXPECT_THROW(closed_loop_norm(theta, Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 2))), DimensionMismatch);
}

TEST(SetQ, Examples) {
  const Theta zero(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3));
  ConstraintSetQ<double> q10{10.0, 0.99, {}};
  EXPECT_TRUE(in_set_q(zero, Costs::identity(3, 3), q10));

  for (double m_p : {1.0, 50.0, 1e6})
    EXPECT_FALSE(in_set_q(scalar_theta(2.0, 0.0), scalar_costs(1.0, 1.0), ConstraintSetQ<double>{m_p, 0.99, {}}));

  const Theta star = benchmark_theta_star();
  const ConstraintSetQ<double> q50{50.0, 0.99, {}};
  EXPECT_TRUE(in_set_q(star, benchmark_costs(), q50));
  const auto sol = solve_dare(star, benchmark_costs(), 1e-13, 100000);
  EXPECT_LE(sol.avg_cost, 50.0);
  EXPECT_LE(power_iteration_norm(star.a() + star.b() * sol.gain), 0.99);
}

TEST(SetQ, TraceBoundIsEnforced) {
  const Theta star = benchmark_theta_star();
  const double j = solve_dare(star, benchmark_costs()).avg_cost;
  EXPECT_TRUE(in_set_q(star, benchmark_costs(), ConstraintSetQ<double>{j + 1e-6, 0.99, {}}));
  EXPECT_FALSE(in_set_q(star, benchmark_costs(), ConstraintSetQ<double>{j - 1e-3, 0.99, {}}));
}

TEST(SetQ, MembersDecayGeometrically) {
  RngStream rng(12, 0);
  const ConstraintSetQ<double> set_q{50.0, 0.99, {}};
  int members = 0;
  for (int trial = 0; trial < 200 && members < 40; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
    const Theta theta(0.6 * rng.normal_matrix(n, n), rng.normal_matrix(n, m));
    const Costs costs = Costs::identity(n, m);
    const auto sol = solve_in_set_q(theta, costs, set_q);
    if (!sol) continue;
    ++members;
    const Eigen::MatrixXd closed = theta.a() + theta.b() * sol->gain;
    const Eigen::VectorXd x0 = rng.normal_vector(n);
    Eigen::VectorXd x = x0;
    for (int t = 1; t <= 50; ++t) {
      x = closed * x;
      EXPECT_LE(x.norm(), std::pow(set_q.rho, t) * x0.norm() * (1.0 + 1e-12));
    }
  }
  EXPECT_GE(members, 10);
}

TEST(SetP, Examples) {
  const Theta zero(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(in_set_p(zero, Costs::identity(3, 3), ConstraintSetP<double>{10.0, 10.0, 0.99}));
  EXPECT_FALSE(in_set_p(zero, Costs::identity(3, 3), ConstraintSetP<double>{10.0, 1.0, 0.99}));

  const Theta sim = benchmark_theta_sim();
  EXPECT_TRUE(in_set_p(sim, benchmark_costs(), ConstraintSetP<double>{50.0, 5.0, 0.99}));
  EXPECT_LE(sim.frobenius_norm(), 5.0);
  const auto sol = solve_dare(sim, benchmark_costs());
  EXPECT_LE(sol.avg_cost, 50.0);
  EXPECT_LE(power_iteration_norm(sim.a() + sim.b() * sol.gain), 0.99);
}

TEST(ConstraintSets, ValidateRejectsBadParameters) {
  EXPECT_THROW((ConstraintSetQ<double>{0.0, 0.5, {}}).validate(), DomainError);
  EXPECT_THROW((ConstraintSetQ<double>{1.0, 1.0, {}}).validate(), DomainError);
  EXPECT_THROW((ConstraintSetP<double>{1.0, -1.0, 0.5}).validate(), DomainError);
  EXPECT_THROW((ConstraintSetP<double>{1.0, 1.0, 0.0}).validate(), DomainError);
}

TEST(ThetaParams, StackedRoundTrip) {
  RngStream rng(13, 0);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = 1 + i % 4, m = 1 + (i / 4) % 3;
    const Theta theta(rng.normal_matrix(n, n), rng.normal_matrix(n, m));
    const Eigen::MatrixXd st = theta.stacked();
    ASSERT_EQ(st.rows(), n + m);
    ASSERT_EQ(st.cols(), n);
    EXPECT_TRUE(Theta::from_stacked(st, n) == theta);
    const Eigen::VectorXd z = rng.normal_vector(n + m);
    EXPECT_LE((st.transpose() * z - (theta.a() * z.head(n) + theta.b() * z.tail(m))).norm(), 1e-12);
  }
}

TEST(ThetaParams, RejectsInvalidShapes) {
  EXPECT_THROW(Theta(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 1)), DimensionMismatch);
  EXPECT_THROW(Theta(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 1)), DimensionMismatch);
  Eigen::MatrixXd nan_a = Eigen::MatrixXd::Zero(1, 1);
  nan_a(0, 0) = std::nan("");
  EXPECT_THROW(Theta(nan_a, Eigen::MatrixXd::Ones(1, 1)), DomainError);
  EXPECT_THROW(Costs(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1)), DomainError);
}

TEST(ThetaParams, FloatScalarInstantiates) {
  using ThetaF = ThetaParams<float>;
  using CostsF = CostMatrices<float>;
  const ThetaF theta(Eigen::MatrixXf::Constant(1, 1, 0.5f), Eigen::MatrixXf::Constant(1, 1, 1.0f));
  const CostsF costs(Eigen::MatrixXf::Constant(1, 1, 1.0f), Eigen::MatrixXf::Constant(1, 1, 1.0f));
  const auto sol = solve_dare(theta, costs, 1e-6f, 10000);
  EXPECT_NEAR(sol.p_matrix(0, 0), 1.132782f, 1e-5f);
}

}  // namespace
