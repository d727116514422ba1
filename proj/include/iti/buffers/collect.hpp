#pragma once

#include <cstdint>
#include <vector>

#include "iti/buffers/replay_buffer.hpp"
#include "iti/env/rollout.hpp"

namespace iti::buffers {

// Uniform random actions from the action box; rollout order, no rewards.
TransitionBuffer collect_random(const env::Domain& domain, int episodes, std::uint64_t seed,
                                Eigen::Index capacity);

// Same rollouts, also keeping every step for the optional trajectory dump.
TransitionBuffer collect_random(const env::Domain& domain, int episodes, std::uint64_t seed,
                                Eigen::Index capacity, std::vector<env::DumpRecord>* dump);

// Source observations paired with their generating latent states. Used only
// for behavior cloning, which needs expert labels.
struct LabeledObservations {
  Eigen::MatrixXd observations;  // obs_dim x N
  Eigen::MatrixXd states;        // 4 x N
};

// Half the episodes follow a Gaussian-perturbed expert, half act randomly,
// so the labeled states cover both expert trajectories and their surroundings.
LabeledObservations collect_labeled(const env::Domain& source, int episodes, std::uint64_t seed,
                                    double expert_noise);

}  // namespace iti::buffers
