#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tsod/constraint_sets.hpp"
#include "tsod/offline.hpp"
#include "tsod/rng.hpp"
#include "tsod/theta.hpp"

namespace tsod {

/// One or more offline summaries sharing (n, m).
struct MultiSourceSummary {
  std::vector<OfflineSummary> summaries;

  MultiSourceSummary() = default;
  explicit MultiSourceSummary(std::vector<OfflineSummary> s) : summaries(std::move(s)) { validate(); }
  explicit MultiSourceSummary(OfflineSummary single) { summaries.push_back(std::move(single)); }

  void validate() const;
  Eigen::Index n() const { return summaries.front().n(); }
  Eigen::Index m() const { return summaries.front().m(); }
  /// Sum of the trajectory lengths.
  std::int64_t total_length() const;
};

/// Online regularized least-squares belief.
///
/// V_t = sum_i U_i + sum_{k<t} z_k z_k^T and theta_hat_t = V_t^{-1} cross_term,
/// with cross_term = sum_i U_i theta_i + sum_{k<t} z_k x_{k+1}^T.
struct BeliefState {
  Eigen::MatrixXd v_matrix;
  Theta theta_hat;
  double logdet_v = 0.0;
  double logdet_u = 0.0;  // log det V_0, fixed
  std::int64_t t = 0;
  Eigen::MatrixXd cross_term;

  Eigen::Index n() const { return theta_hat.n(); }
  Eigen::Index dim() const { return v_matrix.rows(); }
};

BeliefState init_belief(const MultiSourceSummary& sources);
BeliefState init_belief(const OfflineSummary& source);

/// Rank-one update with the observed transition (z_t, x_{t+1}).
BeliefState update_belief(BeliefState belief, const Eigen::VectorXd& z_vector,
                          const Eigen::VectorXd& next_state);

/// Offline part of the confidence width:
/// sum_i alpha_i + mdelta_scale * sum_i sqrt(lambda_max(U_i)) M_delta_i.
double beta_offline_terms(const MultiSourceSummary& sources, double mdelta_scale = 1.0);

/// beta_t(delta2) = n sqrt(2 log(det(V_t)^{1/2} / (det(V_0)^{1/2} delta2))) + offline terms.
double compute_beta(const BeliefState& belief, const MultiSourceSummary& sources, double delta2,
                    double mdelta_scale = 1.0);
/// Same, with the offline terms precomputed by beta_offline_terms().
double compute_beta_with_offset(const BeliefState& belief, double offline_terms, double delta2);

struct AcceptedSample {
  Theta theta;
  Eigen::MatrixXd gain;
};

/// Where sample_constrained() falls back after max_attempts rejections.
struct SampleFallback {
  std::optional<AcceptedSample> last_accepted;
  /// Point that theta_hat is shrunk toward when nothing has been accepted yet.
  Theta anchor;
};

struct SampleOutcome {
  Theta theta_tilde;
  Eigen::MatrixXd gain;
  double avg_cost = 0.0;  // Tr(P(theta_tilde)); NaN when a previous sample is reused
  int rejections = 0;
  double beta_value = 0.0;
  bool fallback_used = false;
};

/// theta_hat + beta V^{-1/2} eta with eta i.i.d. N(0,1), resampled until it
/// lies in Q or max_attempts is exhausted.
SampleOutcome sample_constrained(const BeliefState& belief, double beta,
                                 const ConstraintSetQ<double>& set_q, const Costs& costs,
                                 RngStream& rng, int max_attempts, const SampleFallback& fallback);

}  // namespace tsod
