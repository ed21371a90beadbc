#include "tsod/episode.hpp"

#include <algorithm>
#include <cmath>

#include "tsod/linalg.hpp"
#include "tsod/linear_sim.hpp"

namespace tsod {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::tsod: return "tsod";
    case Variant::ts_no_offline: return "ts_no_offline";
    case Variant::offline_estimate_only: return "offline_estimate_only";
    case Variant::oracle: return "oracle";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::tsod, Variant::ts_no_offline, Variant::offline_estimate_only, Variant::oracle})
    if (variant_name(v) == name) return v;
  throw DomainError("unknown variant: " + std::string(name));
}

MultiSourceSummary sources_for_variant(Variant variant, const MultiSourceSummary& sources,
                                       double regularizer) {
  if (variant == Variant::tsod || variant == Variant::oracle) return sources;

  const Eigen::Index n = sources.n();
  const Eigen::Index m = sources.m();
  OfflineSummary prior;
  prior.u_matrix = regularizer * Eigen::MatrixXd::Identity(n + m, n + m);
  prior.alpha = 0.0;
  prior.m_delta = 0.0;
  prior.s_len = 0;
  prior.delta1 = sources.summaries.front().delta1;
  prior.regularizer = regularizer;
  prior.theta_hat_sim = variant == Variant::ts_no_offline ? Theta::zero(n, m)
                                                          : init_belief(sources).theta_hat;
  return MultiSourceSummary(std::move(prior));
}

EpisodeResult run_episode(const Theta& theta_star, const MultiSourceSummary& sources,
                          const Costs& costs, const ConstraintSetQ<double>& set_q,
                          std::int64_t horizon, double delta, Variant variant, RngStream& rng,
                          const EpisodeOptions& options) {
  if (horizon < 0) throw DomainError("run_episode: horizon must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("run_episode: delta must lie in (0,1)");
  sources.validate();
  if (theta_star.n() != sources.n() || theta_star.m() != sources.m())
    throw DimensionMismatch("run_episode: theta_star does not match the offline sources");

  const MultiSourceSummary active = sources_for_variant(variant, sources, options.regularizer);
  const double delta2 = options.delta2.value_or(delta / (16.0 * static_cast<double>(std::max<std::int64_t>(horizon, 1))));
  const double offline_terms = beta_offline_terms(active, options.beta_mdelta_scale);

  const RiccatiSolution<double> truth = solve_dare(theta_star, costs);

  EpisodeResult result;
  result.trace.j_star = truth.avg_cost;
  result.trace.variant = variant;
  result.trace.seed = rng.seed();
  result.trace.steps.reserve(static_cast<std::size_t>(horizon));

  BeliefState belief = init_belief(active);
  SampleFallback fallback{std::nullopt, belief.theta_hat};
  EpisodeDiagnostics& diag = result.diagnostics;

  std::vector<std::int64_t> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_checkpoint = checkpoints.begin();
  auto record_checkpoint = [&](const BeliefState& b) {
    while (next_checkpoint != checkpoints.end() && *next_checkpoint == b.t) {
      const Eigen::MatrixXd err = b.theta_hat.stacked() - theta_star.stacked();
      CheckpointRecord rec;
      rec.t = b.t;
      rec.weighted_error = weighted_frobenius(b.v_matrix, err);
      rec.beta = compute_beta_with_offset(b, offline_terms, delta2);
      diag.checkpoints.push_back(rec);
      ++next_checkpoint;
    }
    while (next_checkpoint != checkpoints.end() && *next_checkpoint < b.t) ++next_checkpoint;
  };
  record_checkpoint(belief);

  SimState sim = SimState::zero(theta_star.n());
  double cum = 0.0;
  for (std::int64_t step = 0; step < horizon; ++step) {
    const double beta = compute_beta_with_offset(belief, offline_terms, delta2);

    Eigen::MatrixXd gain;
    std::int64_t rejections = 0;
    if (variant == Variant::oracle) {
      gain = truth.gain;
    } else {
      SampleOutcome sample =
          sample_constrained(belief, beta, set_q, costs, rng, options.max_attempts, fallback);
      rejections = sample.rejections;
      diag.total_rejections += sample.rejections;
      if (sample.fallback_used) {
        ++diag.fallbacks;
      } else {
        fallback.last_accepted = AcceptedSample{sample.theta_tilde, sample.gain};
        ++diag.literal_q_checked;
        if (closed_loop_norm(theta_star, sample.gain) > set_q.rho) ++diag.literal_q_violations;
      }
      gain = std::move(sample.gain);
    }

    const double state_norm = sim.state.norm();
    const Eigen::VectorXd control = gain * sim.state;
    const StepRecord rec = step_system(theta_star, sim, control, costs, rng);

    {
      Eigen::LLT<Eigen::MatrixXd> llt(belief.v_matrix);
      diag.sum_weighted_z += rec.z_vector.dot(llt.solve(rec.z_vector));
    }
    diag.z_max = std::max(diag.z_max, rec.z_vector.norm());
    if (options.record_regressors) diag.regressors.push_back(rec.z_vector);

    belief = update_belief(std::move(belief), rec.z_vector, rec.next_state);

    RegretStep row;
    row.t = step + 1;
    row.cost = rec.cost;
    row.instant_regret = rec.cost - truth.avg_cost;
    cum += row.instant_regret;
    row.cum_regret = cum;
    row.beta = beta;
    row.rejections = rejections;
    row.state_norm = state_norm;
    result.trace.steps.push_back(row);

    if (!(sim.state.norm() <= options.state_ceiling))
      throw UnstableRollout("online rollout exceeded the state ceiling at t = " + std::to_string(step + 1));
    record_checkpoint(belief);
  }

  diag.logdet_ratio = belief.logdet_v - belief.logdet_u;
  result.final_belief = std::move(belief);
  return result;
}

EpisodeResult run_episode(const Theta& theta_star, const OfflineSummary& source,
                          const Costs& costs, const ConstraintSetQ<double>& set_q,
                          std::int64_t horizon, double delta, Variant variant, RngStream& rng,
                          const EpisodeOptions& options) {
  return run_episode(theta_star, MultiSourceSummary(source), costs, set_q, horizon, delta, variant,
                     rng, options);
}

AppendixBoundCheck check_appendix_bounds(const EpisodeDiagnostics& diag, std::int64_t horizon,
                                         std::int64_t s_total, Eigen::Index dim) {
  AppendixBoundCheck out;
  const double s = static_cast<double>(std::max<std::int64_t>(s_total, 1));
  const double d = static_cast<double>(dim);
  const double z2 = diag.z_max * diag.z_max;
  // Slack for the accumulated rounding in the tracked sums.
  constexpr double slack = 1e-9;

  out.elliptical_lhs = diag.sum_weighted_z;
  out.elliptical_rhs = 2.0 * std::max(1.0, 40.0 * z2 / s) * diag.logdet_ratio;
  out.elliptical_ok = out.elliptical_lhs <= out.elliptical_rhs * (1.0 + slack) + slack;

  out.logdet_lhs = diag.logdet_ratio;
  out.logdet_rhs = d * std::log1p(40.0 * static_cast<double>(horizon) * z2 / (d * s));
  out.logdet_ok = out.logdet_lhs <= out.logdet_rhs * (1.0 + slack) + slack;
  return out;
}

}  // namespace tsod
