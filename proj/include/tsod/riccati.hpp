#pragma once

#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "tsod/theta.hpp"

namespace tsod {

template <typename Scalar>
struct RiccatiSolution {
  MatrixX<Scalar> p_matrix;  // value matrix P
  MatrixX<Scalar> gain;      // K, m x n, u = K x
  Scalar avg_cost{};         // Tr(P)
  int iterations = 0;
};

template <typename Scalar>
struct RiccatiOptions {
  Scalar tol = Scalar(1e-10);
  int max_iters = 10000;
  /// ||P||_F above this is treated as divergence.
  Scalar divergence_ceiling = Scalar(1e8);
  /// Early exit once Tr(P_k) exceeds this. The iterates are nondecreasing
  /// in the PSD order when started from Q, so Tr(P) would exceed it as well.
  Scalar trace_ceiling = std::numeric_limits<Scalar>::infinity();
};

enum class RiccatiStatus { converged, diverged, max_iters_reached, trace_exceeded };

template <typename Scalar>
struct RiccatiAttempt {
  RiccatiStatus status = RiccatiStatus::diverged;
  std::optional<RiccatiSolution<Scalar>> solution;
  int iterations = 0;
};

/// K(P) = -(R + B^T P B)^{-1} B^T P A.
template <typename Scalar>
MatrixX<Scalar> gain_from_value(const ThetaParams<Scalar>& theta,
                                const CostMatrices<Scalar>& costs,
                                const MatrixX<Scalar>& p) {
  const auto& a = theta.a();
  const auto& b = theta.b();
  const MatrixX<Scalar> pb = p * b;
  const MatrixX<Scalar> lhs = costs.r() + b.transpose() * pb;
  return -lhs.llt().solve(pb.transpose() * a);
}

/// One step of the Riccati map P -> Q + A^T P A + A^T P B K(P).
template <typename Scalar>
MatrixX<Scalar> riccati_map(const ThetaParams<Scalar>& theta,
                            const CostMatrices<Scalar>& costs,
                            const MatrixX<Scalar>& p) {
  const auto& a = theta.a();
  const MatrixX<Scalar> k = gain_from_value(theta, costs, p);
  const MatrixX<Scalar> pa = p * a;
  MatrixX<Scalar> next = costs.q() + a.transpose() * (pa + p * theta.b() * k);
  return Scalar(0.5) * (next + next.transpose());
}

/// ||riccati_map(P) - P||_F.
template <typename Scalar>
Scalar riccati_residual(const ThetaParams<Scalar>& theta,
                        const CostMatrices<Scalar>& costs,
                        const MatrixX<Scalar>& p) {
  return (riccati_map(theta, costs, p) - p).norm();
}

/// Value iteration P_0 = Q, P_{k+1} = map(P_k) without throwing.
template <typename Scalar>
RiccatiAttempt<Scalar> try_solve_dare(const ThetaParams<Scalar>& theta,
                                      const CostMatrices<Scalar>& costs,
                                      const RiccatiOptions<Scalar>& opts = {}) {
  if (costs.q().rows() != theta.n() || costs.r().rows() != theta.m())
    throw DimensionMismatch("cost matrices do not match theta dimensions");

  RiccatiAttempt<Scalar> out;
  MatrixX<Scalar> p = costs.q();
  for (int it = 1; it <= opts.max_iters; ++it) {
    MatrixX<Scalar> next = riccati_map(theta, costs, p);
    out.iterations = it;
    if (!next.allFinite() || next.norm() > opts.divergence_ceiling) {
      out.status = RiccatiStatus::diverged;
      return out;
    }
    if (next.trace() > opts.trace_ceiling) {
      out.status = RiccatiStatus::trace_exceeded;
      return out;
    }
    const Scalar step = (next - p).norm();
    p = std::move(next);
    if (step <= opts.tol) {
      RiccatiSolution<Scalar> sol;
      sol.gain = gain_from_value(theta, costs, p);
      sol.avg_cost = p.trace();
      sol.p_matrix = std::move(p);
      sol.iterations = it;
      out.status = RiccatiStatus::converged;
      out.solution = std::move(sol);
      return out;
    }
  }
  out.status = RiccatiStatus::max_iters_reached;
  return out;
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration.
/// Throws NonStabilizable when the iteration diverges or stalls.
template <typename Scalar>
RiccatiSolution<Scalar> solve_dare(const ThetaParams<Scalar>& theta,
                                   const CostMatrices<Scalar>& costs,
                                   Scalar tol = Scalar(1e-10), int max_iters = 10000) {
  if (!(tol > Scalar(0))) throw DomainError("solve_dare: tol must be positive");
  if (max_iters < 1) throw DomainError("solve_dare: max_iters must be >= 1");
  RiccatiOptions<Scalar> opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  auto attempt = try_solve_dare(theta, costs, opts);
  if (attempt.status != RiccatiStatus::converged) {
    throw NonStabilizable(attempt.status == RiccatiStatus::diverged
                              ? "Riccati iteration diverged"
                              : "Riccati iteration did not converge");
  }
  return std::move(*attempt.solution);
}

/// Largest singular value of A + B K.
template <typename Scalar>
Scalar closed_loop_norm(const ThetaParams<Scalar>& theta, const MatrixX<Scalar>& gain) {
  if (gain.rows() != theta.m() || gain.cols() != theta.n())
    throw DimensionMismatch("gain must be m x n");
  const MatrixX<Scalar> closed = theta.a() + theta.b() * gain;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(closed);
  return svd.singularValues()(0);
}

}  // namespace tsod
