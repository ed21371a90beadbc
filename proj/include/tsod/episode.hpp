#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsod/belief.hpp"

namespace tsod {

/// Online controllers compared by the harness.
///  - tsod: offline-informed Thompson sampling.
///  - ts_no_offline: Thompson sampling from a lambda_0 I prior centred at 0.
///  - offline_estimate_only: prior centred at the offline estimate, but with
///    lambda_0 I precision and no offline width terms.
///  - oracle: applies K(theta_*) every step (test reference).
enum class Variant { tsod, ts_no_offline, offline_estimate_only, oracle };

std::string_view variant_name(Variant v);
/// Throws DomainError for unknown names.
Variant parse_variant(std::string_view name);

struct RegretStep {
  std::int64_t t = 0;  // 1-based time index
  double cost = 0.0;
  double instant_regret = 0.0;
  double cum_regret = 0.0;
  double beta = 0.0;
  std::int64_t rejections = 0;
  double state_norm = 0.0;  // ||x_t|| at the time the cost is incurred
};

struct RegretTrace {
  std::vector<RegretStep> steps;
  double j_star = 0.0;
  std::int64_t run_id = 0;
  Variant variant = Variant::tsod;
  std::uint64_t seed = 0;

  double final_regret() const { return steps.empty() ? 0.0 : steps.back().cum_regret; }
};

struct CheckpointRecord {
  std::int64_t t = 0;           // number of online transitions absorbed
  double weighted_error = 0.0;  // ||V_t^{1/2}(theta_hat_t - theta_*)||_F
  double beta = 0.0;            // beta_t(delta2)
  bool covered() const { return weighted_error <= beta; }
};

struct EpisodeDiagnostics {
  std::int64_t fallbacks = 0;
  std::int64_t total_rejections = 0;
  double sum_weighted_z = 0.0;  // sum_k z_k^T V_k^{-1} z_k, V_k before absorbing z_k
  double z_max = 0.0;           // max_k ||z_k||
  double logdet_ratio = 0.0;    // log det V_T - log det V_0
  std::vector<CheckpointRecord> checkpoints;
  /// ||A_* + B_* K(theta_tilde)||_2 <= rho evaluated with the hidden system.
  std::int64_t literal_q_checked = 0;
  std::int64_t literal_q_violations = 0;
  std::vector<Eigen::VectorXd> regressors;  // z_k, only when requested
};

struct EpisodeOptions {
  int max_attempts = 100;
  double beta_mdelta_scale = 1.0;
  double state_ceiling = 1e6;
  double regularizer = 1.0;  // lambda_0 of the baseline priors
  std::optional<double> delta2;  // default delta / (16 T)
  std::vector<std::int64_t> checkpoints;
  bool record_regressors = false;
};

struct EpisodeResult {
  RegretTrace trace;
  BeliefState final_belief;
  EpisodeDiagnostics diagnostics;
};

/// Sources actually fed to the belief for a given variant.
MultiSourceSummary sources_for_variant(Variant variant, const MultiSourceSummary& sources,
                                       double regularizer);

/// Runs the online loop for `horizon` steps on the hidden system theta_star.
EpisodeResult run_episode(const Theta& theta_star, const MultiSourceSummary& sources,
                          const Costs& costs, const ConstraintSetQ<double>& set_q,
                          std::int64_t horizon, double delta, Variant variant, RngStream& rng,
                          const EpisodeOptions& options = {});

EpisodeResult run_episode(const Theta& theta_star, const OfflineSummary& source,
                          const Costs& costs, const ConstraintSetQ<double>& set_q,
                          std::int64_t horizon, double delta, Variant variant, RngStream& rng,
                          const EpisodeOptions& options = {});

/// Outcome of the two log-det inequalities on one episode.
struct AppendixBoundCheck {
  double elliptical_lhs = 0.0;
  double elliptical_rhs = 0.0;
  bool elliptical_ok = false;
  double logdet_lhs = 0.0;
  double logdet_rhs = 0.0;
  bool logdet_ok = false;
};

/// sum_k ||V_k^{-1/2} z_k||^2 <= 2 max{1, 40 Z^2 / S} log(det V_T / det V_0) and
/// log(det V_T / det V_0) <= d log(1 + 40 T Z^2 / (d S)); valid when
/// lambda_min(V_0) >= S / 40.
AppendixBoundCheck check_appendix_bounds(const EpisodeDiagnostics& diag, std::int64_t horizon,
                                         std::int64_t s_total, Eigen::Index dim);

}  // namespace tsod
