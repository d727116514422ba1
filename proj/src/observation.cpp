#include "iti/env/observation.hpp"

#include <cmath>
#include <numbers>

#include "iti/errors.hpp"

namespace iti::env {

State SourceObsMap::reconstruct(const Eigen::VectorXd& lifted) const {
  return lift.colPivHouseholderQr().solve(lifted - bias);
}

Eigen::VectorXd NuisanceProcess::sample(int t, double dt, const Eigen::VectorXd& episode_phase) const {
  Eigen::VectorXd n(dims());
  for (Eigen::Index i = 0; i < dims(); ++i) {
    const double offset = episode_phase.size() == 0 ? 0.0 : episode_phase(i);
    n(i) = std::sin(frequency(i) * t * dt + phase(i) + offset);
  }
  return n;
}

ObservationModel make_observation_model(std::uint64_t seed, ObservationLayout layout) {
  if (layout.lifted_dim < 4) throw ConfigError("observation: lifted dim must be >= 4");
  if (layout.nuisance_dims < 0) throw ConfigError("observation: nuisance dims must be >= 0");
  Rng rng(derive_seed(seed, "observation-model"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ObservationModel m;
  for (;;) {
    m.map.lift = Eigen::MatrixXd::NullaryExpr(layout.lifted_dim, 4, [&] { return normal(rng); });
    const Eigen::VectorXd sv = m.map.lift.jacobiSvd().singularValues();
    if (sv(sv.size() - 1) > 0.25 * sv(0)) break;
  }
  m.map.lift /= std::sqrt(4.0);
  m.map.bias = Eigen::VectorXd::NullaryExpr(layout.lifted_dim, [&] { return 0.5 * normal(rng); });
  m.nuisance.frequency =
      Eigen::VectorXd::NullaryExpr(layout.nuisance_dims, [&] { return 0.5 + 2.5 * unif(rng); });
  m.nuisance.phase = Eigen::VectorXd::NullaryExpr(
      layout.nuisance_dims, [&] { return 2.0 * std::numbers::pi * unif(rng); });
  return m;
}

SourceObsMap identity_lift(Eigen::Index lifted_dim) {
  SourceObsMap map;
  map.lift = Eigen::MatrixXd::Zero(lifted_dim, 4);
  map.lift.topRows<4>().setIdentity();
  map.bias = Eigen::VectorXd::Zero(lifted_dim);
  return map;
}

Observation observe_source(const State& s, const SourceObsMap& map, const Eigen::VectorXd& nuisance) {
  Observation o(map.lifted_dim() + nuisance.size());
  o.head(map.lifted_dim()) = map.lift * s + map.bias;
  o.tail(nuisance.size()) = nuisance;
  return o;
}

}  // namespace iti::env
