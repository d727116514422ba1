#pragma once

#include <cstdint>
#include <vector>

#include "iti/buffers/replay_buffer.hpp"
#include "iti/pretrain/dynamics_loss.hpp"

namespace iti::pretrain {

struct DynamicsConfig {
  int steps = 20000;  // 100000 at full scale
  // Both rates are cosine-annealed to a tenth over the run.
  Eigen::Index batch_size = 256;
  double forward_lr = 1e-3;
  double inverse_lr = 1e-3;
  bool train_forward = true;  // false: inverse-only, as in the algorithm listing
  bool train_inverse = true;
  double holdout_fraction = 0.1;
  int log_every = 1000;

  void validate() const;
};

struct DynPretrainResult {
  DynamicsBundle dynamics;
  DynLoss initial_heldout;
  DynLoss final_heldout;
  std::vector<std::pair<int, DynLoss>> curve;  // (step, held-out loss)
};

// Fits C_fwd and C_inv on encoded source transitions. `untrained` supplies
// the architecture and initial weights.
DynPretrainResult dyn_pretrain(const buffers::LatentBuffer& source, DynamicsBundle untrained,
                               const DynamicsConfig& config, std::uint64_t seed);

}  // namespace iti::pretrain
