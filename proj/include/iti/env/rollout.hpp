#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "iti/env/distortion.hpp"

namespace iti::env {

// One observation channel over the shared point-mass dynamics. Source and
// target domains differ only in `distortion`.
struct Domain {
  MdpSpec mdp;
  ObservationModel model;
  Distortion distortion;

  Eigen::Index obs_dim() const { return model.obs_dim(); }
  static constexpr Eigen::Index action_dim() { return 2; }
};

// Per-episode randomness: start state and nuisance phase offsets.
struct EpisodeStart {
  State state;
  Eigen::VectorXd nuisance_phase;
};

EpisodeStart sample_episode_start(const Domain& domain, std::uint64_t episode_seed);

Observation observe(const Domain& domain, const State& s, const EpisodeStart& episode, int t);

struct StepInputs {
  const Eigen::MatrixXd& observations;  // obs_dim x episodes
  const Eigen::MatrixXd& states;        // 4 x episodes, for state-feedback controllers only
  int t;
};

using Controller = std::function<Eigen::MatrixXd(const StepInputs&)>;

// Runs one episode per seed in lockstep and returns undiscounted returns.
std::vector<double> rollout_returns(const Domain& domain, const Controller& controller,
                                    std::span<const std::uint64_t> episode_seeds);

std::vector<std::uint64_t> episode_seeds(std::uint64_t seed, int episodes);

// Trajectory dump: a version line, a header row, then one tab-separated row
// per transition with episode id, t, observation values, action values.
struct DumpRecord {
  int episode;
  int t;
  Eigen::VectorXd observation;
  Eigen::VectorXd action;
};

void write_trajectory_dump(std::ostream& out, std::span<const DumpRecord> records);

}  // namespace iti::env
