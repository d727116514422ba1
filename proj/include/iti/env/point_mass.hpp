#pragma once

#include <Eigen/Dense>

namespace iti::env {

// (x, y, vx, vy)
using State = Eigen::Vector4d;
using Action = Eigen::Vector2d;

struct MdpSpec {
  double dt = 0.05;
  double friction = 0.05;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  int horizon = 200;
  double position_cost = 1.0;
  double action_cost = 0.01;
  double action_bound = 1.0;
  // Episodes start at rest, uniformly in [-start_box, start_box]^2.
  double start_box = 1.0;
  double expert_kp = 2.0;
  double expert_kd = 2.0;

  void validate() const;
};

struct StepResult {
  State state;
  double reward;
};

Action clamp_action(const Action& a, const MdpSpec& spec);

// pos' = pos + dt vel;  vel' = (1 - friction) vel + dt a;
// reward = -position_cost |pos' - goal|^2 - action_cost |a|^2
StepResult step_latent(const State& s, const Action& a, const MdpSpec& spec);

// Column-wise batch version; returns rewards as a row.
Eigen::RowVectorXd step_latent_batch(Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                     const MdpSpec& spec);

// Saturated PD controller toward the goal.
Action expert_action(const State& s, const MdpSpec& spec);
Eigen::MatrixXd expert_actions(const Eigen::MatrixXd& states, const MdpSpec& spec);

}  // namespace iti::env
