#include "iti/env/distortion.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "iti/errors.hpp"

namespace iti::env {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::recolor: return "recolor";
    case Family::rotation: return "rotation";
    case Family::nuisance: return "nuisance";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "recolor") return Family::recolor;
  if (name == "rotation") return Family::rotation;
  if (name == "nuisance") return Family::nuisance;
  throw ConfigError("unknown distortion family '" + std::string(name) + "'");
}

Distortion sample_distortion(const DistortionSpec& spec, const ObservationLayout& layout,
                             const DistortionScales& scales) {
  if (!(spec.intensity >= 0.0 && spec.intensity <= 1.0))
    throw ConfigError("distortion intensity must lie in [0, 1]");
  if (!(scales.rotation_angle >= 0.0 && scales.rotation_angle <= std::numbers::pi))
    throw ConfigError("rotation angle must lie in [0, pi]");
  if (!(scales.recolor_gain >= 0.0 && scales.recolor_gain < 1.0))
    throw ConfigError("recolor gain must lie in [0, 1)");

  Distortion d;
  d.spec_ = spec;
  d.lifted_dim_ = layout.lifted_dim;
  d.obs_dim_ = layout.lifted_dim + layout.nuisance_dims;
  const double lambda = spec.intensity;

  Rng rng(derive_seed(spec.seed, "distortion", static_cast<std::uint64_t>(spec.family)));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  switch (spec.family) {
    case Family::recolor:
      d.gains_ = Eigen::VectorXd::NullaryExpr(d.obs_dim_, [&] { return scales.recolor_gain * unif(rng); });
      d.shift_ = Eigen::VectorXd::NullaryExpr(d.obs_dim_, [&] { return scales.recolor_shift * unif(rng); });
      break;
    case Family::rotation: {
      const Eigen::MatrixXd a =
          Eigen::MatrixXd::NullaryExpr(d.obs_dim_, d.obs_dim_, [&] { return normal(rng); });
      Eigen::MatrixXd k = a - a.transpose();
      const double norm = k.jacobiSvd().singularValues()(0);
      if (norm > 0) k *= scales.rotation_angle / norm;
      d.generator_ = k;
      d.rotation_ = lambda == 0.0 ? Eigen::MatrixXd::Identity(d.obs_dim_, d.obs_dim_)
                                  : Eigen::MatrixXd((lambda * k).exp());
      break;
    }
    case Family::nuisance: {
      const double s = layout.nuisance_dims > 0
                           ? scales.nuisance_mix / std::sqrt(double(layout.nuisance_dims))
                           : 0.0;
      d.mixing_ = Eigen::MatrixXd::NullaryExpr(layout.lifted_dim, layout.nuisance_dims,
                                               [&] { return s * normal(rng); });
      break;
    }
  }
  return d;
}

Observation Distortion::apply(const Observation& o) const {
  if (is_identity()) return o;
  if (o.size() != obs_dim_) throw ConfigError("distortion: observation width mismatch");
  const double lambda = spec_.intensity;
  switch (spec_.family) {
    case Family::recolor:
      return ((1.0 + lambda * gains_.array()) * o.array() + lambda * shift_.array()).matrix();
    case Family::rotation:
      return rotation_ * o;
    case Family::nuisance: {
      Observation out = o;
      out.head(lifted_dim_) += lambda * (mixing_ * o.tail(obs_dim_ - lifted_dim_));
      return out;
    }
  }
  return o;
}

Observation Distortion::invert(const Observation& o) const {
  if (is_identity()) return o;
  if (o.size() != obs_dim_) throw ConfigError("distortion: observation width mismatch");
  const double lambda = spec_.intensity;
  switch (spec_.family) {
    case Family::recolor:
      return ((o.array() - lambda * shift_.array()) / (1.0 + lambda * gains_.array())).matrix();
    case Family::rotation:
      return rotation_.transpose() * o;
    case Family::nuisance: {
      Observation out = o;
      out.head(lifted_dim_) -= lambda * (mixing_ * o.tail(obs_dim_ - lifted_dim_));
      return out;
    }
  }
  return o;
}

Observation observe_target(const State& s, const ObservationModel& model, const Distortion& distortion,
                           const Eigen::VectorXd& nuisance) {
  return distortion.apply(observe_source(s, model.map, nuisance));
}

State reconstruct_state(const Observation& target_obs, const ObservationModel& model,
                        const Distortion& distortion) {
  const Observation src = distortion.invert(target_obs);
  return model.map.reconstruct(src.head(model.lifted_dim()));
}

}  // namespace iti::env
