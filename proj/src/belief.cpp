#include "tsod/belief.hpp"

#include <cmath>
#include <limits>

#include "tsod/linalg.hpp"

namespace tsod {

void MultiSourceSummary::validate() const {
  if (summaries.empty()) throw DomainError("at least one offline source is required");
  const auto n0 = summaries.front().n();
  const auto m0 = summaries.front().m();
  for (const auto& s : summaries) {
    if (s.n() != n0 || s.m() != m0) throw DimensionMismatch("offline sources disagree on (n, m)");
    if (s.u_matrix.rows() != n0 + m0 || s.u_matrix.cols() != n0 + m0)
      throw DimensionMismatch("offline precision matrix has the wrong size");
  }
}

std::int64_t MultiSourceSummary::total_length() const {
  std::int64_t total = 0;
  for (const auto& s : summaries) total += s.s_len;
  return total;
}

BeliefState init_belief(const MultiSourceSummary& sources) {
  sources.validate();
  const Eigen::Index n = sources.n();
  const Eigen::Index dim = n + sources.m();

  BeliefState b;
  b.v_matrix = Eigen::MatrixXd::Zero(dim, dim);
  b.cross_term = Eigen::MatrixXd::Zero(dim, n);
  for (const auto& s : sources.summaries) {
    b.v_matrix += s.u_matrix;
    b.cross_term.noalias() += s.u_matrix * s.theta_hat_sim.stacked();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(b.v_matrix);
  if (llt.info() != Eigen::Success) throw SingularPrecision("initial precision is not positive definite");
  b.theta_hat = Theta::from_stacked(llt.solve(b.cross_term), n);
  b.logdet_v = logdet_spd(b.v_matrix);
  b.logdet_u = b.logdet_v;
  b.t = 0;
  return b;
}

BeliefState init_belief(const OfflineSummary& source) {
  return init_belief(MultiSourceSummary(source));
}

BeliefState update_belief(BeliefState belief, const Eigen::VectorXd& z_vector,
                          const Eigen::VectorXd& next_state) {
  if (z_vector.size() != belief.dim() || next_state.size() != belief.n())
    throw DimensionMismatch("update_belief: z or next_state has the wrong length");

  {
    Eigen::LLT<Eigen::MatrixXd> llt(belief.v_matrix);
    const double q = z_vector.dot(llt.solve(z_vector));
    belief.logdet_v += std::log1p(q);
  }
  belief.v_matrix.noalias() += z_vector * z_vector.transpose();
  belief.cross_term.noalias() += z_vector * next_state.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(belief.v_matrix);
  belief.theta_hat = Theta::from_stacked(llt.solve(belief.cross_term), belief.n());
  ++belief.t;
  return belief;
}

double beta_offline_terms(const MultiSourceSummary& sources, double mdelta_scale) {
  double total = 0.0;
  for (const auto& s : sources.summaries) {
    total += s.alpha;
    if (s.m_delta != 0.0) total += mdelta_scale * std::sqrt(lambda_max(s.u_matrix)) * s.m_delta;
  }
  return total;
}

double compute_beta_with_offset(const BeliefState& belief, double offline_terms, double delta2) {
  if (!(delta2 > 0.0 && delta2 < 1.0)) throw DomainError("compute_beta: delta2 must lie in (0,1)");
  const double half_ratio = 0.5 * (belief.logdet_v - belief.logdet_u);
  if (half_ratio < -1e-9)
    throw DomainError("compute_beta: det(V_t) < det(V_0); belief caches are inconsistent");
  const double arg = 2.0 * (std::max(half_ratio, 0.0) - std::log(delta2));
  return static_cast<double>(belief.n()) * std::sqrt(arg) + offline_terms;
}

double compute_beta(const BeliefState& belief, const MultiSourceSummary& sources, double delta2,
                    double mdelta_scale) {
  return compute_beta_with_offset(belief, beta_offline_terms(sources, mdelta_scale), delta2);
}

namespace {

SampleOutcome accept(Theta theta, RiccatiSolution<double> sol, int rejections, double beta,
                     bool fallback) {
  SampleOutcome out;
  out.theta_tilde = std::move(theta);
  out.gain = std::move(sol.gain);
  out.avg_cost = sol.avg_cost;
  out.rejections = rejections;
  out.beta_value = beta;
  out.fallback_used = fallback;
  return out;
}

}  // namespace

SampleOutcome sample_constrained(const BeliefState& belief, double beta,
                                 const ConstraintSetQ<double>& set_q, const Costs& costs,
                                 RngStream& rng, int max_attempts, const SampleFallback& fallback) {
  if (!(beta >= 0.0)) throw DomainError("sample_constrained: beta must be >= 0");
  if (max_attempts < 1) throw DomainError("sample_constrained: max_attempts must be >= 1");
  const Eigen::Index n = belief.n();
  const Eigen::Index dim = belief.dim();
  const Eigen::MatrixXd center = belief.theta_hat.stacked();
  const Eigen::MatrixXd spread = beta * inv_sqrt_spd(belief.v_matrix);

  int rejections = 0;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const Eigen::MatrixXd eta = rng.normal_matrix(dim, n);
    Theta candidate = Theta::from_stacked(center + spread * eta, n);
    if (auto sol = solve_in_set_q(candidate, costs, set_q))
      return accept(std::move(candidate), std::move(*sol), rejections, beta, false);
    ++rejections;
  }

  if (fallback.last_accepted) {
    SampleOutcome out;
    out.theta_tilde = fallback.last_accepted->theta;
    out.gain = fallback.last_accepted->gain;
    out.avg_cost = std::numeric_limits<double>::quiet_NaN();
    out.rejections = rejections;
    out.beta_value = beta;
    out.fallback_used = true;
    return out;
  }

  // Shrink theta_hat toward the anchor until the point lies in Q.
  const Eigen::MatrixXd anchor = fallback.anchor.stacked();
  double scale = 1.0;
  for (int halvings = 0; halvings <= 30; ++halvings, scale *= 0.5) {
    Theta candidate = Theta::from_stacked(anchor + scale * (center - anchor), n);
    if (auto sol = solve_in_set_q(candidate, costs, set_q))
      return accept(std::move(candidate), std::move(*sol), rejections, beta, true);
  }
  if (auto sol = solve_in_set_q(fallback.anchor, costs, set_q))
    return accept(fallback.anchor, std::move(*sol), rejections, beta, true);
  throw NonStabilizable("sample_constrained: neither samples nor the fallback anchor lie in Q");
}

}  // namespace tsod
