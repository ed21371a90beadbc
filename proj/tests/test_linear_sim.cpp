#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tsod/linear_sim.hpp"

namespace {

using namespace tsod;
using tsod::testing::benchmark_costs;
using tsod::testing::benchmark_theta_sim;
using tsod::testing::benchmark_theta_star;

TEST(StepSystem, ZeroDynamicsZeroNoise) {
  const Theta theta = Theta::zero(3, 2);
  const Costs costs = Costs::identity(3, 2);
  SimState state{Eigen::Vector3d(1, 2, 3), 0};
  const auto rec = step_system(theta, state, Eigen::VectorXd::Zero(2), costs, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(rec.next_state, Eigen::VectorXd::Zero(3));
  EXPECT_DOUBLE_EQ(rec.cost, 14.0);
  EXPECT_EQ(state.step, 1);
  EXPECT_EQ(state.state, rec.next_state);
}

TEST(StepSystem, IdentityDynamicsKeepsState) {
  const Theta theta(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 1));
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
  q(0, 0) = 2.5;
  const Costs costs(q, Eigen::MatrixXd::Identity(1, 1));
  SimState state{Eigen::Vector3d(1, 0, 0), 0};
  const auto rec = step_system(theta, state, Eigen::VectorXd::Zero(1), costs, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(rec.next_state, Eigen::VectorXd(Eigen::Vector3d(1, 0, 0)));
  EXPECT_DOUBLE_EQ(rec.cost, 2.5);
}

TEST(StepSystem, BenchmarkStep) {
  SimState state{Eigen::Vector3d(1, 0, 0), 0};
  const auto rec = step_system(benchmark_theta_star(), state, Eigen::Vector2d(1, 0), benchmark_costs(),
                               Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(rec.next_state(0), 1.6, 1e-15);
  EXPECT_NEAR(rec.next_state(1), 0.5, 1e-15);
  EXPECT_NEAR(rec.next_state(2), 0.5, 1e-15);
  EXPECT_EQ(rec.z_vector.size(), 5);
  EXPECT_DOUBLE_EQ(rec.cost, 2.0);
}

TEST(StepSystem, DimensionMismatchThrows) {
  SimState state = SimState::zero(2);
  EXPECT_THROW(step_system(benchmark_theta_star(), state, Eigen::Vector2d(0, 0), benchmark_costs(),
                           Eigen::VectorXd::Zero(3)),
               DimensionMismatch);
}

TEST(StepSystem, NoiseIsWhite) {
  const Theta theta = Theta::zero(3, 1);
  const Costs costs = Costs::identity(3, 1);
  RngStream rng(21, 2);
  SimState state = SimState::zero(3);
  const int steps = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
  for (int i = 0; i < steps; ++i) {
    // With A = 0 and u = 0 the next state is the noise itself.
    const auto rec = step_system(theta, state, Eigen::VectorXd::Zero(1), costs, rng);
    sum += rec.next_state;
    outer += rec.next_state * rec.next_state.transpose();
  }
  const Eigen::Vector3d mean = sum / steps;
  const Eigen::Matrix3d cov = outer / steps - mean * mean.transpose();
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LE((cov - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 0.05);
}

TEST(StepSystem, DeterministicAndCostNonnegative) {
  const Theta theta = benchmark_theta_star();
  const Costs costs = benchmark_costs();
  RngStream r1(5, 2), r2(5, 2), ctrl(6, 0);
  SimState s1 = SimState::zero(3), s2 = SimState::zero(3);
  for (int i = 0; i < 500; ++i) {
    const Eigen::VectorXd u = -0.3 * s1.state.head(2) + 0.1 * ctrl.normal_vector(2);
    const auto a = step_system(theta, s1, u, costs, r1);
    const auto b = step_system(theta, s2, u, costs, r2);
    ASSERT_EQ(a.next_state, b.next_state);
    ASSERT_EQ(a.cost, b.cost);
    ASSERT_GE(a.cost, 0.0);
  }
}

TEST(MakeTrueTheta, ZeroDeltaIsIdentity) {
  const Theta sim = benchmark_theta_sim();
  const auto truth = make_true_theta(sim, Theta::zero(3, 2));
  EXPECT_TRUE(truth.theta == sim);
  EXPECT_EQ(truth.delta_norm, 0.0);
}

TEST(MakeTrueTheta, BenchmarkPairDiffersInTwoEntries) {
  const Theta diff = benchmark_theta_star() - benchmark_theta_sim();
  const Eigen::MatrixXd st = diff.stacked();
  int nonzero = 0;
  for (Eigen::Index i = 0; i < st.size(); ++i)
    if (st.data()[i] != 0.0) ++nonzero;
  EXPECT_EQ(nonzero, 2);
  EXPECT_NEAR(diff.a()(0, 0), -0.1, 1e-15);
  EXPECT_NEAR(diff.b()(0, 0), -0.1, 1e-15);
  const auto truth = make_true_theta(benchmark_theta_sim(), diff);
  EXPECT_NEAR(truth.delta_norm, std::sqrt(0.02), 1e-15);
  EXPECT_LE(truth.delta_norm, 0.15);
  EXPECT_LE((truth.theta.stacked() - benchmark_theta_star().stacked()).norm(), 1e-15);
}

TEST(MakeTrueTheta, RandomDeltaRoundTrips) {
  RngStream rng(22, 0);
  Eigen::MatrixXd dir = rng.normal_matrix(5, 3);
  dir *= 0.15 / dir.norm();
  const Theta delta = Theta::from_stacked(dir, 3);
  const auto truth = make_true_theta(benchmark_theta_sim(), delta);
  EXPECT_LE(((truth.theta - benchmark_theta_sim()).stacked() - dir).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(truth.delta_norm, 0.15, 1e-15);
  EXPECT_THROW(make_true_theta(benchmark_theta_sim(), Theta::zero(2, 2)), DimensionMismatch);
}

TEST(SampleThetaDelta, ZeroRadius) {
  RngStream rng(23, 0);
  EXPECT_TRUE(sample_theta_delta(0.0, 3, 2, rng) == Theta::zero(3, 2));
  EXPECT_THROW(sample_theta_delta(-0.1, 3, 2, rng), DomainError);
}

TEST(SampleThetaDelta, RadiusIsUniform) {
  RngStream rng(24, 0);
  for (int i = 0; i < 1000; ++i) ASSERT_LE(sample_theta_delta(0.15, 3, 2, rng).frobenius_norm(), 0.15);
  double max_norm = 0.0, sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double r = sample_theta_delta(1.0, 3, 2, rng).frobenius_norm();
    max_norm = std::max(max_norm, r);
    sum += r;
  }
  EXPECT_LE(max_norm, 1.0);
  EXPECT_NEAR(sum / 10000.0, 0.5, 0.02);
}

TEST(Rng, StreamsAreDistinctAndReproducible) {
  RngStream a(1, 1), b(1, 1), c(1, 2), d(2, 1);
  const double xa = a.normal(), xb = b.normal();
  EXPECT_EQ(xa, xb);
  EXPECT_NE(xa, c.normal());
  EXPECT_NE(xa, d.normal());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_NE(hash64(1, 2, 3), hash64(1, 3, 2));
}

}  // namespace
