#pragma once

#include <cstdint>
#include <string>

#include "iti/env/rollout.hpp"
#include "iti/pretrain/networks.hpp"

namespace iti::harness {

struct EvalResult {
  double mean_return = 0;
  double std_return = 0;  // population std over episodes
  int episodes = 0;
  std::uint64_t seed = 0;
  std::string phase;  // "source", "zero-shot", "+ITI", or an ablation name
};

// Undiscounted episode returns of the greedy policy. The only place in the
// pipeline where rewards are read.
EvalResult evaluate(const pretrain::PolicyBundle& policy, const env::Domain& domain, int episodes,
                    std::uint64_t seed, std::string phase = {});

EvalResult evaluate_expert(const env::Domain& domain, int episodes, std::uint64_t seed);
EvalResult evaluate_random(const env::Domain& domain, int episodes, std::uint64_t seed);

EvalResult summarize_returns(const std::vector<double>& returns, std::uint64_t seed, std::string phase);

}  // namespace iti::harness
