#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "iti/buffers/collect.hpp"
#include "iti/env/point_mass.hpp"
#include "iti/pretrain/networks.hpp"

namespace iti::pretrain {

struct BcConfig {
  int demo_episodes = 100;
  double expert_noise = 0.3;
  int epochs = 30;
  Eigen::Index batch_size = 256;
  double learning_rate = 5e-4;  // cosine-annealed to a tenth over the epochs
  double holdout_fraction = 0.1;

  void validate() const;
};

struct BcResult {
  PolicyBundle policy;
  std::vector<double> epoch_losses;  // mean training loss per epoch
  double initial_heldout_loss = 0;
  double heldout_loss = 0;
};

struct BcLossEval {
  double loss = 0;
  TensorList encoder;
  TensorList head;
};

// Mean over batch and action dims of (pi(o) - target)^2.
BcLossEval bc_loss_with_grads(const PolicyBundle& policy, const Eigen::MatrixXd& obs,
                              const Eigen::MatrixXd& target_actions);
double bc_loss(const PolicyBundle& policy, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& target_actions);

// Regresses pi_z(F(o)) onto expert(state) with a 90/10 train/held-out split.
// `untrained` carries the architecture, initial weights and normalizer.
BcResult bc_train(const buffers::LabeledObservations& data, const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& expert,
                  PolicyBundle untrained, const BcConfig& config, std::uint64_t seed);

}  // namespace iti::pretrain
