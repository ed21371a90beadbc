#include "tsod/offline.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tsod/io.hpp"
#include "tsod/linalg.hpp"
#include "tsod/linear_sim.hpp"

namespace tsod {

void OfflineConfig::validate(Eigen::Index n, Eigen::Index m) const {
  if (!(dither_std > 0.0)) throw ConfigError("offline.dither_std", "must be positive");
  if (!(regularizer > 0.0)) throw ConfigError("offline.regularizer", "must be positive");
  if (gain_refresh < 1) throw ConfigError("offline.gain_refresh", "must be >= 1");
  if (!(state_ceiling > 0.0)) throw ConfigError("offline.state_ceiling", "must be positive");
  if (controller_mode == ControllerMode::fixed_gain) {
    if (!fixed_gain) throw ConfigError("offline.fixed_gain", "required in fixed_gain mode");
    if (fixed_gain->rows() != m || fixed_gain->cols() != n)
      throw ConfigError("offline.fixed_gain", "must be m x n");
  }
  try {
    set_p.validate();
  } catch (const DomainError& e) {
    throw ConfigError("offline.set_p", e.what());
  }
}

double alpha_from_bound(const Eigen::MatrixXd& u_matrix, Eigen::Index n, double delta1,
                        double regularizer, double phi) {
  if (!(delta1 > 0.0 && delta1 < 1.0)) throw DomainError("alpha_from_bound: delta1 must lie in (0,1)");
  if (!(regularizer > 0.0)) throw DomainError("alpha_from_bound: regularizer must be positive");
  const double dim = static_cast<double>(u_matrix.rows());
  const double log_ratio = 0.5 * logdet_spd(u_matrix) - 0.5 * dim * std::log(regularizer);
  const double arg = 2.0 * (log_ratio - std::log(delta1));
  return static_cast<double>(n) * std::sqrt(std::max(arg, 0.0)) + std::sqrt(regularizer) * phi;
}

OfflineRun run_offline(const Theta& theta_sim, const Costs& costs, std::int64_t s_len,
                       const OfflineConfig& cfg, double delta1, double m_delta, RngStream& rng) {
  const Eigen::Index n = theta_sim.n();
  const Eigen::Index m = theta_sim.m();
  const Eigen::Index dim = n + m;
  if (s_len < 1) throw DomainError("run_offline: s_len must be >= 1");
  if (!(delta1 > 0.0 && delta1 < 1.0)) throw DomainError("run_offline: delta1 must lie in (0,1)");
  if (!(m_delta >= 0.0)) throw DomainError("run_offline: m_delta must be >= 0");
  cfg.validate(n, m);

  OfflineRun run;
  run.trajectory.states.resize(s_len, n);
  run.trajectory.controls.resize(s_len, m);
  run.trajectory.next_states.resize(s_len, n);

  Eigen::MatrixXd u_mat = cfg.regularizer * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(dim, n);

  Eigen::MatrixXd gain;
  if (cfg.controller_mode == ControllerMode::fixed_gain) {
    gain = *cfg.fixed_gain;
  } else {
    // Regularized initial estimate is theta = 0, whose optimal gain is zero.
    gain = solve_dare(Theta::zero(n, m), costs).gain;
  }

  SimState sim = SimState::zero(n);
  for (std::int64_t s = 0; s < s_len; ++s) {
    if (cfg.controller_mode == ControllerMode::ce_dither && s > 0 && s % cfg.gain_refresh == 0) {
      const Theta estimate = Theta::from_stacked(u_mat.llt().solve(cross), n);
      if (in_set_p(estimate, costs, cfg.set_p)) {
        gain = solve_dare(estimate, costs).gain;
        ++run.gain_updates;
      } else {
        ++run.gain_update_skips;
      }
    }
    const Eigen::VectorXd dither = cfg.dither_std * rng.normal_vector(m);
    const Eigen::VectorXd control = gain * sim.state + dither;
    run.trajectory.states.row(s) = sim.state.transpose();
    run.trajectory.controls.row(s) = control.transpose();

    const StepRecord rec = step_system(theta_sim, sim, control, costs, rng);
    if (!(rec.next_state.norm() <= cfg.state_ceiling))
      throw UnstableRollout("offline rollout exceeded the state ceiling at step " + std::to_string(s));
    run.trajectory.next_states.row(s) = rec.next_state.transpose();

    u_mat.selfadjointView<Eigen::Lower>().rankUpdate(rec.z_vector);
    cross.noalias() += rec.z_vector * rec.next_state.transpose();
  }
  u_mat = u_mat.selfadjointView<Eigen::Lower>();

  OfflineSummary& sum = run.summary;
  sum.u_matrix = u_mat;
  sum.theta_hat_sim = Theta::from_stacked(u_mat.llt().solve(cross), n);
  sum.alpha = alpha_from_bound(u_mat, n, delta1, cfg.regularizer, cfg.set_p.phi);
  sum.s_len = s_len;
  sum.m_delta = m_delta;
  sum.delta1 = delta1;
  sum.regularizer = cfg.regularizer;
  return run;
}

BatchEstimate batch_least_squares(const OfflineTrajectory& traj, double regularizer) {
  const Eigen::Index n = traj.states.cols();
  const Eigen::Index dim = n + traj.controls.cols();
  Eigen::MatrixXd y(traj.states.rows(), dim);
  y << traj.states, traj.controls;
  BatchEstimate out;
  out.u_matrix = regularizer * Eigen::MatrixXd::Identity(dim, dim) + y.transpose() * y;
  out.theta_stacked = out.u_matrix.ldlt().solve(y.transpose() * traj.next_states);
  return out;
}

std::int64_t assumption2_s_threshold(Eigen::Index dim, double delta1) {
  if (!(delta1 > 0.0 && delta1 < 1.0)) throw DomainError("delta1 must lie in (0,1)");
  return static_cast<std::int64_t>(std::ceil(200.0 * static_cast<double>(dim) * std::log(12.0 / delta1)));
}

Assumption2Report check_assumption2(const OfflineSummary& summary, const Theta& theta_sim_true) {
  const Eigen::Index dim = summary.u_matrix.rows();
  Assumption2Report rep;
  rep.s_threshold = assumption2_s_threshold(dim, summary.delta1);
  rep.s_meets_threshold = summary.s_len >= rep.s_threshold;
  const Eigen::MatrixXd gram =
      summary.u_matrix - summary.regularizer * Eigen::MatrixXd::Identity(dim, dim);
  rep.lambda_min_unregularized = lambda_min(gram);
  rep.lambda_min_regularized = lambda_min(summary.u_matrix);
  rep.lambda_floor = static_cast<double>(summary.s_len) / 40.0;
  rep.lambda_min_ok = rep.lambda_min_unregularized >= rep.lambda_floor;
  const Eigen::MatrixXd err = summary.theta_hat_sim.stacked() - theta_sim_true.stacked();
  rep.weighted_error = weighted_frobenius(summary.u_matrix, err);
  rep.alpha_covers = rep.weighted_error <= summary.alpha;
  return rep;
}

void write_offline_trajectory_csv(const std::string& path, const OfflineTrajectory& traj) {
  std::vector<std::string> header{"s"};
  for (Eigen::Index i = 0; i < traj.states.cols(); ++i) header.push_back("xi_" + std::to_string(i + 1));
  for (Eigen::Index j = 0; j < traj.controls.cols(); ++j) header.push_back("v_" + std::to_string(j + 1));
  CsvWriter csv(path, header);
  for (Eigen::Index s = 0; s < traj.states.rows(); ++s) {
    csv.field(static_cast<std::int64_t>(s + 1));
    for (Eigen::Index i = 0; i < traj.states.cols(); ++i) csv.field(traj.states(s, i));
    for (Eigen::Index j = 0; j < traj.controls.cols(); ++j) csv.field(traj.controls(s, j));
    csv.end_row();
  }
  csv.close();
}

void write_offline_summary(const std::string& path, const OfflineSummary& summary) {
  nlohmann::json doc;
  doc["format"] = "tsod-offline-summary/1";
  doc["n"] = summary.n();
  doc["m"] = summary.m();
  doc["u_matrix"] = matrix_to_json(summary.u_matrix);
  doc["a_hat"] = matrix_to_json(summary.theta_hat_sim.a());
  doc["b_hat"] = matrix_to_json(summary.theta_hat_sim.b());
  doc["alpha"] = summary.alpha;
  doc["s_len"] = summary.s_len;
  doc["m_delta"] = summary.m_delta;
  doc["delta1"] = summary.delta1;
  doc["regularizer"] = summary.regularizer;
  write_text_file(path, doc.dump(2) + "\n");
}

OfflineSummary read_offline_summary(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse offline summary " + path + ": " + e.what());
  }
  try {
    OfflineSummary s;
    s.u_matrix = matrix_from_json(doc.at("u_matrix"), "u_matrix");
    s.theta_hat_sim = Theta(matrix_from_json(doc.at("a_hat"), "a_hat"),
                            matrix_from_json(doc.at("b_hat"), "b_hat"));
    s.alpha = doc.at("alpha").get<double>();
    s.s_len = doc.at("s_len").get<std::int64_t>();
    s.m_delta = doc.at("m_delta").get<double>();
    s.delta1 = doc.at("delta1").get<double>();
    s.regularizer = doc.at("regularizer").get<double>();
    if (s.u_matrix.rows() != s.theta_hat_sim.dim() || s.u_matrix.cols() != s.theta_hat_sim.dim())
      throw DimensionMismatch("u_matrix does not match theta dimensions");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed offline summary " + path + ": " + e.what());
  }
}

}  // namespace tsod
