#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "iti/env/point_mass.hpp"
#include "iti/rng.hpp"

namespace iti::env {

using Observation = Eigen::VectorXd;

// Injective linear lift of the latent state: the first block of every
// observation is W s + b.
struct SourceObsMap {
  Eigen::MatrixXd lift;  // lifted_dim x 4
  Eigen::VectorXd bias;

  Eigen::Index lifted_dim() const { return lift.rows(); }
  // Least-squares inverse of the lift; exact on the range of the map.
  State reconstruct(const Eigen::VectorXd& lifted) const;
};

// Time-varying clutter exposed in dedicated observation slots:
// n_t[i] = sin(frequency[i] * t * dt + phase[i] + episode_phase[i]).
struct NuisanceProcess {
  Eigen::VectorXd frequency;
  Eigen::VectorXd phase;

  Eigen::Index dims() const { return frequency.size(); }
  Eigen::VectorXd sample(int t, double dt, const Eigen::VectorXd& episode_phase) const;
};

struct ObservationModel {
  SourceObsMap map;
  NuisanceProcess nuisance;

  Eigen::Index lifted_dim() const { return map.lifted_dim(); }
  Eigen::Index nuisance_dims() const { return nuisance.dims(); }
  Eigen::Index obs_dim() const { return lifted_dim() + nuisance_dims(); }
};

struct ObservationLayout {
  Eigen::Index lifted_dim = 12;
  Eigen::Index nuisance_dims = 4;
};

// Random Gaussian lift (re-drawn until well conditioned), uniform nuisance
// frequencies in [0.5, 3] rad/s.
ObservationModel make_observation_model(std::uint64_t seed, ObservationLayout layout = {});

// Identity lift: top 4x4 block is I, everything else zero.
SourceObsMap identity_lift(Eigen::Index lifted_dim);

Observation observe_source(const State& s, const SourceObsMap& map, const Eigen::VectorXd& nuisance);

}  // namespace iti::env
