#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tsod/rng.hpp"
#include "tsod/theta.hpp"

namespace tsod {

struct SimState {
  Eigen::VectorXd state;
  std::int64_t step = 0;

  /// Every rollout starts from x = 0.
  static SimState zero(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), 0}; }
};

struct StepRecord {
  Eigen::VectorXd z_vector;    // [x; u]
  Eigen::VectorXd next_state;  // theta^T z + w
  double cost = 0.0;           // x^T Q x + u^T R u at the current (x, u)
};

/// Advances `state` one step with an explicit noise vector.
StepRecord step_system(const Theta& theta, SimState& state, const Eigen::VectorXd& control,
                       const Costs& costs, const Eigen::VectorXd& noise);

/// Advances `state` one step with w ~ N(0, I) drawn from `rng`.
StepRecord step_system(const Theta& theta, SimState& state, const Eigen::VectorXd& control,
                       const Costs& costs, RngStream& rng);

struct TrueTheta {
  Theta theta;
  double delta_norm = 0.0;  // ||theta_delta||_F
};

/// theta_sim + theta_delta, with ||theta_delta||_F for bookkeeping.
TrueTheta make_true_theta(const Theta& theta_sim, const Theta& theta_delta);

/// Uniform direction on the Frobenius sphere with radius ~ U[0, m_delta].
Theta sample_theta_delta(double m_delta, Eigen::Index n, Eigen::Index m, RngStream& rng);

}  // namespace tsod
