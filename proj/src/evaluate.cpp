#include "iti/harness/evaluate.hpp"

#include <cmath>

namespace iti::harness {

EvalResult summarize_returns(const std::vector<double>& returns, std::uint64_t seed, std::string phase) {
  EvalResult r;
  r.episodes = int(returns.size());
  r.seed = seed;
  r.phase = std::move(phase);
  if (returns.empty()) return r;
  double sum = 0;
  for (double v : returns) sum += v;
  r.mean_return = sum / double(returns.size());
  double ss = 0;
  for (double v : returns) ss += (v - r.mean_return) * (v - r.mean_return);
  r.std_return = std::sqrt(ss / double(returns.size()));
  return r;
}

EvalResult evaluate(const pretrain::PolicyBundle& policy, const env::Domain& domain, int episodes,
                    std::uint64_t seed, std::string phase) {
  if (episodes < 1) throw ConfigError("evaluate: episodes must be >= 1");
  const auto seeds = env::episode_seeds(seed, episodes);
  const auto returns = env::rollout_returns(
      domain, [&](const env::StepInputs& in) { return policy.act(in.observations); }, seeds);
  return summarize_returns(returns, seed, std::move(phase));
}

EvalResult evaluate_expert(const env::Domain& domain, int episodes, std::uint64_t seed) {
  const auto seeds = env::episode_seeds(seed, episodes);
  const auto returns = env::rollout_returns(
      domain, [&](const env::StepInputs& in) { return env::expert_actions(in.states, domain.mdp); }, seeds);
  return summarize_returns(returns, seed, "expert");
}

EvalResult evaluate_random(const env::Domain& domain, int episodes, std::uint64_t seed) {
  const auto seeds = env::episode_seeds(seed, episodes);
  Rng rng(derive_seed(seed, "random-eval"));
  std::uniform_real_distribution<double> unif(-domain.mdp.action_bound, domain.mdp.action_bound);
  const auto returns = env::rollout_returns(
      domain,
      [&](const env::StepInputs& in) {
        return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(2, in.observations.cols(), [&] { return unif(rng); }));
      },
      seeds);
  return summarize_returns(returns, seed, "random");
}

}  // namespace iti::harness
