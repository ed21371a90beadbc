#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tsod/episode.hpp"
#include "tsod/linalg.hpp"

namespace {

using namespace tsod;
using tsod::testing::benchmark_costs;
using tsod::testing::benchmark_theta_sim;
using tsod::testing::benchmark_theta_star;

OfflineSummary benchmark_summary(std::int64_t s_len, std::uint64_t seed) {
  RngStream rng(seed, 1);
  return run_offline(benchmark_theta_sim(), benchmark_costs(), s_len, OfflineConfig{}, 1e-4, 0.15, rng)
      .summary;
}

EpisodeResult run(Variant variant, std::int64_t horizon, std::uint64_t seed, const EpisodeOptions& opts = {},
                  std::int64_t s_len = 1000) {
  RngStream rng(seed, 2);
  return run_episode(benchmark_theta_star(), benchmark_summary(s_len, seed), benchmark_costs(),
                     ConstraintSetQ<double>{}, horizon, 0.1, variant, rng, opts);
}

TEST(RunEpisode, ZeroHorizonIsEmpty) {
  const auto res = run(Variant::tsod, 0, 1);
  EXPECT_TRUE(res.trace.steps.empty());
  EXPECT_EQ(res.trace.final_regret(), 0.0);
  EXPECT_EQ(res.final_belief.t, 0);
}

TEST(RunEpisode, TraceBookkeeping) {
  const auto res = run(Variant::tsod, 300, 2);
  const double j = solve_dare(benchmark_theta_star(), benchmark_costs()).avg_cost;
  EXPECT_EQ(res.trace.j_star, j);
  ASSERT_EQ(res.trace.steps.size(), 300u);
  double cum = 0.0;
  for (std::size_t i = 0; i < res.trace.steps.size(); ++i) {
    const auto& s = res.trace.steps[i];
    EXPECT_EQ(s.t, static_cast<std::int64_t>(i + 1));
    EXPECT_GE(s.cost, 0.0);
    EXPECT_EQ(s.instant_regret, s.cost - j);
    cum += s.instant_regret;
    EXPECT_EQ(s.cum_regret, cum);
    EXPECT_GT(s.beta, 0.0);
  }
  EXPECT_EQ(res.trace.steps.front().state_norm, 0.0);
  EXPECT_EQ(res.final_belief.t, 300);
}

TEST(RunEpisode, OracleRegretIsSublinear) {
  const std::int64_t horizon = 20000;
  const auto res = run(Variant::oracle, horizon, 3);
  const double j = res.trace.j_star;
  const double mean_instant = res.trace.final_regret() / static_cast<double>(horizon);
  EXPECT_LT(std::abs(mean_instant), 0.05 * j);
  EXPECT_EQ(res.diagnostics.fallbacks, 0);
  EXPECT_EQ(res.diagnostics.total_rejections, 0);
}

TEST(RunEpisode, DeterministicForFixedSeed) {
  const auto a = run(Variant::tsod, 200, 4);
  const auto b = run(Variant::tsod, 200, 4);
  ASSERT_EQ(a.trace.steps.size(), b.trace.steps.size());
  for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
    EXPECT_EQ(a.trace.steps[i].cost, b.trace.steps[i].cost);
    EXPECT_EQ(a.trace.steps[i].beta, b.trace.steps[i].beta);
  }
  EXPECT_EQ(a.final_belief.v_matrix, b.final_belief.v_matrix);
}

TEST(RunEpisode, SingleSourceListMatchesSingleSourcePathExactly) {
  const OfflineSummary s = benchmark_summary(1000, 5);
  EpisodeOptions opts;
  opts.checkpoints = {50, 100};
  RngStream r1(5, 2), r2(5, 2);
  const auto a = run_episode(benchmark_theta_star(), s, benchmark_costs(), ConstraintSetQ<double>{}, 100,
                             0.1, Variant::tsod, r1, opts);
  const auto b = run_episode(benchmark_theta_star(), MultiSourceSummary(std::vector<OfflineSummary>{s}),
                             benchmark_costs(), ConstraintSetQ<double>{}, 100, 0.1, Variant::tsod, r2, opts);
  for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
    ASSERT_EQ(a.trace.steps[i].cost, b.trace.steps[i].cost);
    ASSERT_EQ(a.trace.steps[i].cum_regret, b.trace.steps[i].cum_regret);
    ASSERT_EQ(a.trace.steps[i].beta, b.trace.steps[i].beta);
    ASSERT_EQ(a.trace.steps[i].rejections, b.trace.steps[i].rejections);
  }
  EXPECT_EQ(a.final_belief.v_matrix, b.final_belief.v_matrix);
  EXPECT_EQ(a.final_belief.theta_hat.stacked(), b.final_belief.theta_hat.stacked());
  EXPECT_EQ(a.diagnostics.sum_weighted_z, b.diagnostics.sum_weighted_z);
}

TEST(RunEpisode, EllipticalSumMatchesBruteForce) {
  EpisodeOptions opts;
  opts.record_regressors = true;
  const OfflineSummary s = benchmark_summary(2000, 6);
  RngStream rng(6, 2);
  const auto res = run_episode(benchmark_theta_star(), s, benchmark_costs(), ConstraintSetQ<double>{}, 400,
                               0.1, Variant::tsod, rng, opts);
  ASSERT_EQ(res.diagnostics.regressors.size(), 400u);
  Eigen::MatrixXd v = s.u_matrix;
  double sum = 0.0, z_max = 0.0;
  for (const auto& z : res.diagnostics.regressors) {
    sum += z.dot(v.inverse() * z);
    z_max = std::max(z_max, z.norm());
    v += z * z.transpose();
  }
  EXPECT_NEAR(res.diagnostics.sum_weighted_z, sum, 1e-8 * std::max(1.0, sum));
  EXPECT_EQ(res.diagnostics.z_max, z_max);
  EXPECT_NEAR(res.diagnostics.logdet_ratio, logdet_spd(v) - logdet_spd(s.u_matrix), 1e-7);

  const auto check = check_appendix_bounds(res.diagnostics, 400, 2000, 5);
  EXPECT_TRUE(check.elliptical_ok) << check.elliptical_lhs << " > " << check.elliptical_rhs;
  EXPECT_TRUE(check.logdet_ok) << check.logdet_lhs << " > " << check.logdet_rhs;
}

TEST(RunEpisode, CheckpointsRecordedAfterUpdates) {
  EpisodeOptions opts;
  opts.checkpoints = {0, 25, 50, 100};
  const auto res = run(Variant::tsod, 100, 7, opts);
  ASSERT_EQ(res.diagnostics.checkpoints.size(), 4u);
  EXPECT_EQ(res.diagnostics.checkpoints[0].t, 0);
  EXPECT_EQ(res.diagnostics.checkpoints[3].t, 100);
  for (const auto& c : res.diagnostics.checkpoints) {
    EXPECT_GE(c.weighted_error, 0.0);
    EXPECT_GT(c.beta, 0.0);
  }
}

TEST(RunEpisode, StateCeilingAborts) {
  EpisodeOptions opts;
  opts.state_ceiling = 1e-3;
  EXPECT_THROW(run(Variant::tsod, 10, 8, opts), UnstableRollout);
}

TEST(RunEpisode, RejectsBadArguments) {
  RngStream rng(9, 2);
  const OfflineSummary s = benchmark_summary(100, 9);
  EXPECT_THROW(run_episode(benchmark_theta_star(), s, benchmark_costs(), ConstraintSetQ<double>{}, -1, 0.1,
                           Variant::tsod, rng),
               DomainError);
  EXPECT_THROW(run_episode(benchmark_theta_star(), s, benchmark_costs(), ConstraintSetQ<double>{}, 10, 1.0,
                           Variant::tsod, rng),
               DomainError);
  EXPECT_THROW(run_episode(Theta::zero(2, 2), s, benchmark_costs(), ConstraintSetQ<double>{}, 10, 0.1,
                           Variant::tsod, rng),
               DimensionMismatch);
}

TEST(SourcesForVariant, BaselinePriors) {
  const MultiSourceSummary sources(benchmark_summary(500, 10));
  const auto none = sources_for_variant(Variant::ts_no_offline, sources, 1.0);
  ASSERT_EQ(none.summaries.size(), 1u);
  EXPECT_EQ(none.summaries[0].u_matrix, Eigen::MatrixXd::Identity(5, 5));
  EXPECT_TRUE(none.summaries[0].theta_hat_sim == Theta::zero(3, 2));
  EXPECT_EQ(beta_offline_terms(none), 0.0);

  const auto est = sources_for_variant(Variant::offline_estimate_only, sources, 1.0);
  EXPECT_EQ(est.summaries[0].u_matrix, Eigen::MatrixXd::Identity(5, 5));
  EXPECT_LE((est.summaries[0].theta_hat_sim.stacked() - sources.summaries[0].theta_hat_sim.stacked()).norm(), 1e-12);
  EXPECT_EQ(beta_offline_terms(est), 0.0);

  const auto same = sources_for_variant(Variant::tsod, sources, 1.0);
  EXPECT_EQ(same.summaries[0].u_matrix, sources.summaries[0].u_matrix);
}

TEST(Variants, NamesRoundTrip) {
  for (Variant v : {Variant::tsod, Variant::ts_no_offline, Variant::offline_estimate_only, Variant::oracle})
    EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("greedy"), DomainError);
}

}  // namespace
