#include "iti/buffers/collect.hpp"

namespace iti::buffers {

TransitionBuffer collect_random(const env::Domain& domain, int episodes, std::uint64_t seed,
                                Eigen::Index capacity) {
  return collect_random(domain, episodes, seed, capacity, nullptr);
}

TransitionBuffer collect_random(const env::Domain& domain, int episodes, std::uint64_t seed,
                                Eigen::Index capacity, std::vector<env::DumpRecord>* dump) {
  if (episodes < 0) throw ConfigError("collect_random: negative episode count");
  TransitionBuffer buf(domain.obs_dim(), env::Domain::action_dim(), capacity);
  const double bound = domain.mdp.action_bound;
  std::uniform_real_distribution<double> unif(-bound, bound);
  for (int e = 0; e < episodes; ++e) {
    const auto start = env::sample_episode_start(domain, derive_seed(seed, "episode", std::uint64_t(e)));
    Rng act_rng(derive_seed(seed, "random-actions", std::uint64_t(e)));
    env::State s = start.state;
    env::Observation o = env::observe(domain, s, start, 0);
    for (int t = 0; t < domain.mdp.horizon; ++t) {
      env::Action a;
      a << unif(act_rng), unif(act_rng);
      s = env::step_latent(s, a, domain.mdp).state;
      env::Observation o_next = env::observe(domain, s, start, t + 1);
      buf.push(o, a, o_next);
      if (dump) dump->push_back({e, t, o, a});
      o = std::move(o_next);
    }
  }
  return buf;
}

LabeledObservations collect_labeled(const env::Domain& source, int episodes, std::uint64_t seed,
                                    double expert_noise) {
  const auto steps = static_cast<Eigen::Index>(episodes) * source.mdp.horizon;
  LabeledObservations out;
  out.observations.resize(source.obs_dim(), steps);
  out.states.resize(4, steps);
  const double bound = source.mdp.action_bound;
  std::uniform_real_distribution<double> unif(-bound, bound);
  std::normal_distribution<double> noise(0.0, expert_noise);
  Eigen::Index k = 0;
  for (int e = 0; e < episodes; ++e) {
    const auto start = env::sample_episode_start(source, derive_seed(seed, "labeled-episode", std::uint64_t(e)));
    Rng rng(derive_seed(seed, "labeled-actions", std::uint64_t(e)));
    const bool expert = e % 2 == 0;
    env::State s = start.state;
    for (int t = 0; t < source.mdp.horizon; ++t) {
      out.observations.col(k) = env::observe(source, s, start, t);
      out.states.col(k) = s;
      ++k;
      env::Action a;
      if (expert) {
        a = env::expert_action(s, source.mdp);
        a(0) += noise(rng);
        a(1) += noise(rng);
      } else {
        a << unif(rng), unif(rng);
      }
      s = env::step_latent(s, a, source.mdp).state;
    }
  }
  return out;
}

}  // namespace iti::buffers
