#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

#include "iti/env/observation.hpp"

namespace iti::env {

enum class Family { recolor, rotation, nuisance };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

struct DistortionSpec {
  Family family = Family::rotation;
  double intensity = 0.0;  // lambda in [0, 1]; 0 is the identity map
  std::uint64_t seed = 0;
};

// Magnitudes of the random draws at full intensity.
struct DistortionScales {
  double recolor_gain = 0.8;    // d ~ U(-g, g), so 1 + lambda d stays >= 0.2
  double recolor_shift = 1.0;   // u ~ U(-s, s)
  double rotation_angle = 1.0;  // spectral norm of K (radians, kept <= pi)
  double nuisance_mix = 1.0;    // M ~ N(0, mix^2 / k)
};

// A sampled target observation map. Drawn once per run and then fixed.
class Distortion {
 public:
  Distortion() = default;  // identity

  const DistortionSpec& spec() const { return spec_; }
  bool is_identity() const { return spec_.intensity == 0.0 || obs_dim_ == 0; }

  const Eigen::VectorXd& gains() const { return gains_; }
  const Eigen::VectorXd& shift() const { return shift_; }
  const Eigen::MatrixXd& generator() const { return generator_; }
  const Eigen::MatrixXd& rotation() const { return rotation_; }
  const Eigen::MatrixXd& mixing() const { return mixing_; }

  Observation apply(const Observation& source_obs) const;
  // Exact inverse of apply().
  Observation invert(const Observation& target_obs) const;

  friend Distortion sample_distortion(const DistortionSpec& spec, const ObservationLayout& layout,
                                      const DistortionScales& scales);

 private:
  DistortionSpec spec_;
  Eigen::Index obs_dim_ = 0;
  Eigen::Index lifted_dim_ = 0;
  Eigen::VectorXd gains_;      // recolor d
  Eigen::VectorXd shift_;      // recolor u
  Eigen::MatrixXd generator_;  // rotation K (skew-symmetric)
  Eigen::MatrixXd rotation_;   // exp(lambda K)
  Eigen::MatrixXd mixing_;     // nuisance M, lifted_dim x k
};

// recolor:  o' = (I + lambda diag(d)) o + lambda u
// rotation: o' = exp(lambda K) o
// nuisance: lifted block gets + lambda M n_t; the slots keep exposing n_t.
// Internals depend only on (family, seed); lambda scales them.
Distortion sample_distortion(const DistortionSpec& spec, const ObservationLayout& layout,
                             const DistortionScales& scales = {});

Observation observe_target(const State& s, const ObservationModel& model, const Distortion& distortion,
                           const Eigen::VectorXd& nuisance);

// Full-observability witness: recovers the latent state from a target observation.
State reconstruct_state(const Observation& target_obs, const ObservationModel& model,
                        const Distortion& distortion);

}  // namespace iti::env
