#pragma once

#include <optional>

#include "tsod/riccati.hpp"

namespace tsod {

/// Admissible set for online samples: Tr(P(theta)) <= m_p and a
/// rho-contractive closed loop.
template <typename Scalar>
struct ConstraintSetQ {
  Scalar m_p = Scalar(50);
  Scalar rho = Scalar(0.99);
  std::optional<Scalar> m_k_cache;  // largest ||K|| seen among members

  void validate() const {
    if (!(m_p > Scalar(0))) throw DomainError("set_q.m_p must be positive");
    if (!(rho > Scalar(0) && rho < Scalar(1))) throw DomainError("set_q.rho must lie in (0,1)");
  }
};

/// Admissible set for the offline learner's system.
template <typename Scalar>
struct ConstraintSetP {
  Scalar m_sim = Scalar(50);
  Scalar phi = Scalar(5);
  Scalar rho_sim = Scalar(0.99);

  void validate() const {
    if (!(m_sim > Scalar(0))) throw DomainError("set_p.m_sim must be positive");
    if (!(phi > Scalar(0))) throw DomainError("set_p.phi must be positive");
    if (!(rho_sim > Scalar(0) && rho_sim < Scalar(1)))
      throw DomainError("set_p.rho_sim must lie in (0,1)");
  }
};

/// Riccati solution of theta if theta lies in Q, else nullopt.
///
/// The closed loop is evaluated with theta's own (A, B); the true system is
/// unknown at sampling time.
template <typename Scalar>
std::optional<RiccatiSolution<Scalar>> solve_in_set_q(const ThetaParams<Scalar>& theta,
                                                      const CostMatrices<Scalar>& costs,
                                                      const ConstraintSetQ<Scalar>& set_q) {
  RiccatiOptions<Scalar> opts;
  opts.trace_ceiling = set_q.m_p;
  auto attempt = try_solve_dare(theta, costs, opts);
  if (attempt.status != RiccatiStatus::converged) return std::nullopt;
  if (attempt.solution->avg_cost > set_q.m_p) return std::nullopt;
  if (closed_loop_norm(theta, attempt.solution->gain) > set_q.rho) return std::nullopt;
  return std::move(attempt.solution);
}

template <typename Scalar>
bool in_set_q(const ThetaParams<Scalar>& theta, const CostMatrices<Scalar>& costs,
              const ConstraintSetQ<Scalar>& set_q) {
  return solve_in_set_q(theta, costs, set_q).has_value();
}

template <typename Scalar>
bool in_set_p(const ThetaParams<Scalar>& theta, const CostMatrices<Scalar>& costs,
              const ConstraintSetP<Scalar>& set_p) {
  if (theta.frobenius_norm() > set_p.phi) return false;
  RiccatiOptions<Scalar> opts;
  opts.trace_ceiling = set_p.m_sim;
  auto attempt = try_solve_dare(theta, costs, opts);
  if (attempt.status != RiccatiStatus::converged) return false;
  if (attempt.solution->avg_cost > set_p.m_sim) return false;
  return closed_loop_norm(theta, attempt.solution->gain) <= set_p.rho_sim;
}

}  // namespace tsod
