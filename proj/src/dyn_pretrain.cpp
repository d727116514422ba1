#include "iti/pretrain/dyn_pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iti/nn/rmsprop.hpp"

namespace iti::pretrain {

void DynamicsConfig::validate() const {
  if (steps < 0) throw ConfigError("dynamics: steps must be >= 0");
  if (batch_size < 1) throw ConfigError("dynamics: batch_size must be >= 1");
  if (!(forward_lr > 0) || !(inverse_lr > 0)) throw ConfigError("dynamics: learning rates must be positive");
  if (!train_forward && !train_inverse) throw ConfigError("dynamics: nothing to train");
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) throw ConfigError("dynamics: holdout must lie in (0, 1)");
  if (log_every < 1) throw ConfigError("dynamics: log_every must be >= 1");
}

DynPretrainResult dyn_pretrain(const buffers::LatentBuffer& source, DynamicsBundle dyn,
                               const DynamicsConfig& config, std::uint64_t seed) {
  config.validate();
  const Eigen::Index total = source.size();
  if (total < 10) throw ConfigError("dyn_pretrain: need at least 10 transitions");

  Rng split_rng(derive_seed(seed, "dyn-split"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_hold = std::max<Eigen::Index>(1, Eigen::Index(std::llround(config.holdout_fraction * double(total))));
  const std::vector<Eigen::Index> hold(order.begin(), order.begin() + n_hold);
  const std::vector<Eigen::Index> train(order.begin() + n_hold, order.end());
  const auto held = source.gather(hold);

  const DynTerms terms{config.train_forward, config.train_inverse};
  auto heldout = [&] { return dyn_loss(held.first, held.next, held.action, dyn, terms); };

  DynPretrainResult result;
  result.initial_heldout = heldout();
  result.curve.emplace_back(0, result.initial_heldout);

  nn::RmsProp<double> fwd_opt({config.forward_lr, 0.99, 1e-8});
  nn::RmsProp<double> inv_opt({config.inverse_lr, 0.99, 1e-8});
  Rng rng(derive_seed(seed, "dyn-batches"));
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(config.batch_size));
  for (int step = 1; step <= config.steps; ++step) {
    const double progress = double(step - 1) / double(config.steps);
    fwd_opt.set_learning_rate(nn::cosine_rate(config.forward_lr, progress, 0.1));
    inv_opt.set_learning_rate(nn::cosine_rate(config.inverse_lr, progress, 0.1));
    for (auto& i : idx) i = train[pick(rng)];
    const auto b = source.gather(idx);
    auto eval = dyn_loss_with_grads(b.first, b.next, b.action, dyn, terms);
    if (!std::isfinite(eval.loss.total))
      throw TrainingError("dyn_pretrain: non-finite loss at step " + std::to_string(step));
    if (config.train_forward) fwd_opt.step(dyn.forward.parameters(), eval.grads.forward);
    if (config.train_inverse) inv_opt.step(dyn.inverse.parameters(), eval.grads.inverse);
    if (step % config.log_every == 0 || step == config.steps) result.curve.emplace_back(step, heldout());
  }
  result.final_heldout = heldout();
  result.dynamics = std::move(dyn);
  return result;
}

}  // namespace iti::pretrain
