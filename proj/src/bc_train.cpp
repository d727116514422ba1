#include "iti/pretrain/bc_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "iti/nn/rmsprop.hpp"

namespace iti::pretrain {

void BcConfig::validate() const {
  if (demo_episodes < 1) throw ConfigError("bc: demo_episodes must be >= 1");
  if (epochs < 0) throw ConfigError("bc: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("bc: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("bc: learning rate must be positive");
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) throw ConfigError("bc: holdout must lie in (0, 1)");
}

BcLossEval bc_loss_with_grads(const PolicyBundle& policy, const Eigen::MatrixXd& obs,
                              const Eigen::MatrixXd& target) {
  const auto enc = policy.encoder.net.forward(policy.encoder.normalizer.apply(obs));
  const auto head = policy.head.forward(enc.output);
  const Eigen::MatrixXd r = policy.action_bound * head.output - target;
  const double n = double(r.size());
  BcLossEval out;
  out.loss = r.squaredNorm() / n;
  auto gh = nn::backward(head.tape, Eigen::MatrixXd((2.0 * policy.action_bound / n) * r));
  auto ge = nn::backward(enc.tape, gh.input);
  out.head = std::move(gh.params);
  out.encoder = std::move(ge.params);
  return out;
}

double bc_loss(const PolicyBundle& policy, const Eigen::MatrixXd& obs, const Eigen::MatrixXd& target) {
  return (policy.act(obs) - target).squaredNorm() / double(target.size());
}

BcResult bc_train(const buffers::LabeledObservations& data,
                  const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& expert, PolicyBundle policy,
                  const BcConfig& config, std::uint64_t seed) {
  config.validate();
  const Eigen::Index total = data.observations.cols();
  if (total < 10) throw ConfigError("bc_train: need at least 10 labeled observations");
  const Eigen::MatrixXd labels = expert(data.states);

  Rng rng(derive_seed(seed, "bc-split"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_hold = std::max<Eigen::Index>(1, Eigen::Index(std::llround(config.holdout_fraction * double(total))));
  std::vector<Eigen::Index> train(order.begin() + n_hold, order.end());
  const Eigen::VectorXi hold_idx = Eigen::Map<const Eigen::Matrix<Eigen::Index, -1, 1>>(order.data(), n_hold).cast<int>();
  const Eigen::MatrixXd hold_obs = data.observations(Eigen::all, hold_idx);
  const Eigen::MatrixXd hold_act = labels(Eigen::all, hold_idx);

  BcResult result;
  result.initial_heldout_loss = bc_loss(policy, hold_obs, hold_act);

  nn::RmsProp<double> opt({config.learning_rate, 0.99, 1e-8});
  Rng shuffle_rng(derive_seed(seed, "bc-shuffle"));
  Eigen::MatrixXd obs_b, act_b;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double progress = config.epochs > 1 ? double(epoch) / double(config.epochs - 1) : 0.0;
    opt.set_learning_rate(nn::cosine_rate(config.learning_rate, progress, 0.1));
    std::shuffle(train.begin(), train.end(), shuffle_rng);
    double sum = 0;
    Eigen::Index count = 0;
    for (std::size_t start = 0; start < train.size(); start += std::size_t(config.batch_size)) {
      const auto n = std::min<std::size_t>(std::size_t(config.batch_size), train.size() - start);
      Eigen::VectorXi idx(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) idx(Eigen::Index(i)) = int(train[start + i]);
      obs_b = data.observations(Eigen::all, idx);
      act_b = labels(Eigen::all, idx);
      auto eval = bc_loss_with_grads(policy, obs_b, act_b);
      if (!std::isfinite(eval.loss) || !nn::all_finite(eval.encoder) || !nn::all_finite(eval.head)) {
        std::ostringstream msg;
        msg << "bc_train diverged at epoch " << epoch << ", batch offset " << start << " (loss " << eval.loss
            << ", last epoch loss " << (result.epoch_losses.empty() ? NAN : result.epoch_losses.back()) << ")";
        throw TrainingError(msg.str());
      }
      sum += eval.loss * double(n);
      count += Eigen::Index(n);
      ParamRefs params = policy.encoder.net.parameters();
      for (auto* p : policy.head.parameters()) params.push_back(p);
      TensorList grads = std::move(eval.encoder);
      for (auto& g : eval.head) grads.push_back(std::move(g));
      opt.step(params, grads);
    }
    result.epoch_losses.push_back(sum / double(count));
  }
  result.heldout_loss = bc_loss(policy, hold_obs, hold_act);
  if (!std::isfinite(result.heldout_loss)) throw TrainingError("bc_train: held-out loss is not finite");
  result.policy = std::move(policy);
  return result;
}

}  // namespace iti::pretrain
