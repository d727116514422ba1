#include "iti/env/rollout.hpp"

#include <numbers>

#include "iti/errors.hpp"
#include "iti/harness/table_io.hpp"

namespace iti::env {

EpisodeStart sample_episode_start(const Domain& domain, std::uint64_t episode_seed) {
  Rng rng(episode_seed);
  std::uniform_real_distribution<double> box(-domain.mdp.start_box, domain.mdp.start_box);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  EpisodeStart e;
  e.state << box(rng), box(rng), 0.0, 0.0;
  e.nuisance_phase =
      Eigen::VectorXd::NullaryExpr(domain.model.nuisance_dims(), [&] { return angle(rng); });
  return e;
}

Observation observe(const Domain& domain, const State& s, const EpisodeStart& episode, int t) {
  const auto n = domain.model.nuisance.sample(t, domain.mdp.dt, episode.nuisance_phase);
  return observe_target(s, domain.model, domain.distortion, n);
}

std::vector<double> rollout_returns(const Domain& domain, const Controller& controller,
                                    std::span<const std::uint64_t> seeds) {
  const auto n = static_cast<Eigen::Index>(seeds.size());
  std::vector<EpisodeStart> starts;
  Eigen::MatrixXd states(4, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    starts.push_back(sample_episode_start(domain, seeds[std::size_t(i)]));
    states.col(i) = starts.back().state;
  }
  std::vector<double> returns(seeds.size(), 0.0);
  Eigen::MatrixXd obs(domain.obs_dim(), n);
  for (int t = 0; t < domain.mdp.horizon; ++t) {
    for (Eigen::Index i = 0; i < n; ++i)
      obs.col(i) = observe(domain, states.col(i), starts[std::size_t(i)], t);
    const Eigen::MatrixXd actions = controller(StepInputs{obs, states, t});
    if (actions.rows() != 2 || actions.cols() != n)
      throw ConfigError("rollout: controller returned wrong action shape");
    const auto rewards = step_latent_batch(states, actions, domain.mdp);
    for (Eigen::Index i = 0; i < n; ++i) returns[std::size_t(i)] += rewards(i);
  }
  return returns;
}

std::vector<std::uint64_t> episode_seeds(std::uint64_t seed, int episodes) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < episodes; ++i) out.push_back(derive_seed(seed, "episode", std::uint64_t(i)));
  return out;
}

void write_trajectory_dump(std::ostream& out, std::span<const DumpRecord> records) {
  out << "# iti-trajectory v1\n";
  const auto obs_dim = records.empty() ? 0 : records.front().observation.size();
  const auto act_dim = records.empty() ? 0 : records.front().action.size();
  out << "episode\tt";
  for (Eigen::Index i = 0; i < obs_dim; ++i) out << "\to" << i;
  for (Eigen::Index i = 0; i < act_dim; ++i) out << "\ta" << i;
  out << '\n';
  for (const auto& r : records) {
    out << r.episode << '\t' << r.t;
    for (Eigen::Index i = 0; i < r.observation.size(); ++i)
      out << '\t' << harness::format_real(r.observation(i));
    for (Eigen::Index i = 0; i < r.action.size(); ++i) out << '\t' << harness::format_real(r.action(i));
    out << '\n';
  }
}

}  // namespace iti::env
