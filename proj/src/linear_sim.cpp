#include "tsod/linear_sim.hpp"

namespace tsod {

StepRecord step_system(const Theta& theta, SimState& state, const Eigen::VectorXd& control,
                       const Costs& costs, const Eigen::VectorXd& noise) {
  const Eigen::Index n = theta.n();
  if (state.state.size() != n || control.size() != theta.m() || noise.size() != n)
    throw DimensionMismatch("step_system: state, control or noise has the wrong length");
  if (costs.q().rows() != n || costs.r().rows() != theta.m())
    throw DimensionMismatch("step_system: cost matrices do not match theta");

  StepRecord rec;
  rec.z_vector.resize(theta.dim());
  rec.z_vector << state.state, control;
  rec.cost = costs.stage_cost(state.state, control);
  rec.next_state = theta.a() * state.state + theta.b() * control + noise;

  state.state = rec.next_state;
  ++state.step;
  return rec;
}

StepRecord step_system(const Theta& theta, SimState& state, const Eigen::VectorXd& control,
                       const Costs& costs, RngStream& rng) {
  const Eigen::VectorXd noise = rng.normal_vector(theta.n());
  return step_system(theta, state, control, costs, noise);
}

TrueTheta make_true_theta(const Theta& theta_sim, const Theta& theta_delta) {
  theta_sim.check_same_shape(theta_delta);
  return {theta_sim + theta_delta, theta_delta.frobenius_norm()};
}

Theta sample_theta_delta(double m_delta, Eigen::Index n, Eigen::Index m, RngStream& rng) {
  if (!(m_delta >= 0.0)) throw DomainError("sample_theta_delta: m_delta must be >= 0");
  if (m_delta == 0.0) return Theta::zero(n, m);
  Eigen::MatrixXd dir = rng.normal_matrix(n + m, n);
  const double len = dir.norm();
  const double radius = m_delta * rng.uniform();
  dir *= radius / len;
  return Theta::from_stacked(dir, n);
}

}  // namespace tsod
