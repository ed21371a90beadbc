#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsod/constraint_sets.hpp"
#include "tsod/rng.hpp"
#include "tsod/theta.hpp"

namespace tsod {

enum class ControllerMode { ce_dither, fixed_gain };

struct OfflineConfig {
  double dither_std = 1.0;  // std of the exploration input nu_s
  double regularizer = 1.0; // lambda_0 in U_0 = lambda_0 I
  ControllerMode controller_mode = ControllerMode::ce_dither;
  std::optional<Eigen::MatrixXd> fixed_gain;
  ConstraintSetP<double> set_p;
  int gain_refresh = 50;         // steps between certainty-equivalence gain updates
  double state_ceiling = 1e6;    // ||xi|| above this aborts with UnstableRollout

  void validate(Eigen::Index n, Eigen::Index m) const;
};

/// What the online learner consumes from an offline dataset.
struct OfflineSummary {
  Eigen::MatrixXd u_matrix;  // U_S = lambda_0 I + sum y y^T
  Theta theta_hat_sim;
  double alpha = 0.0;        // alpha_S(delta_1)
  std::int64_t s_len = 0;
  double m_delta = 0.0;
  double delta1 = 0.05;
  double regularizer = 1.0;  // lambda_0 folded into u_matrix

  Eigen::Index n() const { return theta_hat_sim.n(); }
  Eigen::Index m() const { return theta_hat_sim.m(); }
};

/// Offline trajectory: row s holds [xi_s; v_s].
struct OfflineTrajectory {
  Eigen::MatrixXd states;    // S x n
  Eigen::MatrixXd controls;  // S x m
  Eigen::MatrixXd next_states;  // S x n
};

struct OfflineRun {
  OfflineSummary summary;
  OfflineTrajectory trajectory;
  int gain_updates = 0;
  int gain_update_skips = 0;  // refreshes where the estimate was outside P
};

/// Simulates the auxiliary system for s_len steps and summarizes the data.
OfflineRun run_offline(const Theta& theta_sim, const Costs& costs, std::int64_t s_len,
                       const OfflineConfig& cfg, double delta1, double m_delta, RngStream& rng);

/// alpha = n sqrt(2 log(det(U)^{1/2} det(lambda_0 I)^{-1/2} / delta1)) + sqrt(lambda_0) phi.
double alpha_from_bound(const Eigen::MatrixXd& u_matrix, Eigen::Index n, double delta1,
                        double regularizer, double phi);

/// Batch regularized least squares on a recorded trajectory:
/// U = lambda_0 I + Y^T Y, theta = U^{-1} Y^T Xi'.
struct BatchEstimate {
  Eigen::MatrixXd u_matrix;
  Eigen::MatrixXd theta_stacked;
};
BatchEstimate batch_least_squares(const OfflineTrajectory& traj, double regularizer);

struct Assumption2Report {
  std::int64_t s_threshold = 0;   // ceil(200 (n+m) log(12/delta1))
  bool s_meets_threshold = false;
  double lambda_min_unregularized = 0.0;  // of sum y y^T
  double lambda_min_regularized = 0.0;    // of U_S
  double lambda_floor = 0.0;              // S / 40
  bool lambda_min_ok = false;             // on the unregularized Gram matrix
  double weighted_error = 0.0;            // ||U_S^{1/2}(theta_hat - theta_sim)||_F
  bool alpha_covers = false;
};

Assumption2Report check_assumption2(const OfflineSummary& summary, const Theta& theta_sim_true);

/// ceil(200 (n+m) log(12/delta1)).
std::int64_t assumption2_s_threshold(Eigen::Index dim, double delta1);

/// CSV with header s,xi_1..xi_n,v_1..v_m.
void write_offline_trajectory_csv(const std::string& path, const OfflineTrajectory& traj);
/// JSON sidecar with U_S, theta_hat, alpha, S, M_delta, delta1, lambda_0.
void write_offline_summary(const std::string& path, const OfflineSummary& summary);
OfflineSummary read_offline_summary(const std::string& path);

}  // namespace tsod
