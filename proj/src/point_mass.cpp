#include "iti/env/point_mass.hpp"

#include "iti/errors.hpp"

namespace iti::env {

void MdpSpec::validate() const {
  if (!(dt > 0)) throw ConfigError("mdp: dt must be positive");
  if (horizon < 1) throw ConfigError("mdp: horizon must be >= 1");
  if (!(action_bound > 0)) throw ConfigError("mdp: action bound must be positive");
  if (friction < 0 || friction >= 1) throw ConfigError("mdp: friction must lie in [0, 1)");
  if (!(start_box >= 0)) throw ConfigError("mdp: start box must be nonnegative");
}

Action clamp_action(const Action& a, const MdpSpec& spec) {
  return a.cwiseMax(-spec.action_bound).cwiseMin(spec.action_bound);
}

StepResult step_latent(const State& s, const Action& action, const MdpSpec& spec) {
  const Action a = clamp_action(action, spec);
  State next;
  next.head<2>() = s.head<2>() + spec.dt * s.tail<2>();
  next.tail<2>() = (1.0 - spec.friction) * s.tail<2>() + spec.dt * a;
  const double reward = -spec.position_cost * (next.head<2>() - spec.goal).squaredNorm() -
                        spec.action_cost * a.squaredNorm();
  return {next, reward};
}

Eigen::RowVectorXd step_latent_batch(Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                     const MdpSpec& spec) {
  Eigen::RowVectorXd rewards(states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const auto r = step_latent(states.col(i), actions.col(i), spec);
    states.col(i) = r.state;
    rewards(i) = r.reward;
  }
  return rewards;
}

Action expert_action(const State& s, const MdpSpec& spec) {
  const Action raw = -spec.expert_kp * (s.head<2>() - spec.goal) - spec.expert_kd * s.tail<2>();
  return clamp_action(raw, spec);
}

Eigen::MatrixXd expert_actions(const Eigen::MatrixXd& states, const MdpSpec& spec) {
  Eigen::MatrixXd out(2, states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) out.col(i) = expert_action(states.col(i), spec);
  return out;
}

}  // namespace iti::env
