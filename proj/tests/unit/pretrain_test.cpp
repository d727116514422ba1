#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support/gradcheck.hpp"
#include "iti/buffers/collect.hpp"
#include "iti/env/rollout.hpp"
#include "iti/pretrain/bc_train.hpp"
#include "iti/pretrain/dyn_pretrain.hpp"
#include "iti/pretrain/dynamics_loss.hpp"

using namespace iti;
using namespace iti::pretrain;
using Eigen::MatrixXd;
using nn::MlpSpec;
using nn::Stage;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0, scale);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Zero biases put narrow ReLU layers exactly on their kink, where central
// differences disagree with any one-sided derivative.
void jitter(ParamRefs params, Rng& rng) {
  std::normal_distribution<double> n(0, 0.2);
  for (auto* p : params)
    for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] += n(rng);
}

// Constant predictors on 1-D latents and actions.
DynamicsBundle constant_dynamics(double fwd_value, double inv_value) {
  const Eigen::Index h = 3;
  auto latent = Mlp::zeros({{1, h, h}, {Stage::relu(), Stage::relu()}});
  auto action = Mlp::zeros({{1, h}, {Stage::relu()}});
  auto trunk = Mlp::zeros({{2 * h, 1}, {Stage::tanh()}});
  trunk.bias(0)(0, 0) = std::atanh(fwd_value);
  auto inverse = Mlp::zeros({{2, h, 1}, {Stage::relu(), Stage::linear()}});
  inverse.bias(1)(0, 0) = inv_value;
  return {ForwardDynamics(latent, action, trunk), inverse};
}

env::Domain source_domain() { return env::Domain{env::MdpSpec{}, env::make_observation_model(7), {}}; }

ArchConfig small_arch(Rng& rng) {
  std::uniform_int_distribution<int> w(2, 16), layers(1, 2);
  ArchConfig a;
  a.z_dim = w(rng);
  a.hidden = w(rng);
  a.policy_hidden = w(rng);
  a.disc_hidden = w(rng);
  a.inverse_hidden_layers = layers(rng);
  return a;
}

}  // namespace

TEST_CASE("dynamics loss on the one-dimensional worked example") {
  const auto dyn = constant_dynamics(0.6, 0.1);
  const MatrixXd z = MatrixXd::Constant(1, 1, 0.5), a = MatrixXd::Constant(1, 1, 0.2),
                 zn = MatrixXd::Constant(1, 1, 0.7);
  const auto l = dyn_loss(z, zn, a, dyn);
  CHECK(l.forward == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(l.inverse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(l.total == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(dyn_loss(z, zn, a, dyn, {true, false}).total == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(dyn_loss(z, zn, a, dyn, {false, true}).total == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("exact predictors give zero dynamics loss") {
  const auto dyn = constant_dynamics(0.6, 0.1);
  const MatrixXd z = MatrixXd::Constant(1, 4, 0.5);
  const auto l = dyn_loss(z, MatrixXd::Constant(1, 4, 0.6), MatrixXd::Constant(1, 4, 0.1), dyn);
  CHECK(l.total == doctest::Approx(0.0).epsilon(1e-24));
}

TEST_CASE("dynamics loss is nonnegative and permutation invariant") {
  Rng rng(3);
  ArchConfig arch;
  arch.z_dim = 5;
  arch.hidden = 8;
  const auto dyn = make_dynamics(5, 2, arch, rng);
  const MatrixXd z = random_matrix(5, 12, rng), zn = random_matrix(5, 12, rng), a = random_matrix(2, 12, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 12, rng);
  const auto l = dyn_loss(z, zn, a, dyn);
  const auto p = dyn_loss(z * perm, zn * perm, a * perm, dyn);
  CHECK(l.total >= 0);
  CHECK(p.total == doctest::Approx(l.total).epsilon(1e-12));
}

TEST_CASE("dynamics loss gradients pass the finite-difference oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto arch = small_arch(rng);
    auto dyn = make_dynamics(arch.z_dim, 2, arch, rng);
    jitter(dyn.forward.parameters(), rng);
    jitter(dyn.inverse.parameters(), rng);
    MatrixXd z = random_matrix(arch.z_dim, 6, rng, 0.5), zn = random_matrix(arch.z_dim, 6, rng, 0.5);
    const MatrixXd a = random_matrix(2, 6, rng, 0.5);
    for (DynTerms terms : {DynTerms{true, true}, DynTerms{true, false}, DynTerms{false, true}}) {
      const auto eval = dyn_loss_with_grads(z, zn, a, dyn, terms);
      auto loss = [&] { return dyn_loss(z, zn, a, dyn, terms).total; };
      if (terms.forward) CHECK(testing::gradient_error(dyn.forward.parameters(), eval.grads.forward, loss) <= 1e-4);
      if (terms.inverse) CHECK(testing::gradient_error(dyn.inverse.parameters(), eval.grads.inverse, loss) <= 1e-4);
      CHECK(testing::gradient_error(testing::single(z), {eval.grads.z}, loss) <= 1e-4);
      CHECK(testing::gradient_error(testing::single(zn), {eval.grads.z_next}, loss) <= 1e-4);
    }
  }
}

TEST_CASE("behavior cloning loss gradients pass the finite-difference oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto arch = small_arch(rng);
    const MatrixXd obs = random_matrix(6, 7, rng);
    auto policy = make_policy(6, 2, 1.0, Normalizer::fit(obs), arch, rng);
    jitter(policy.encoder.net.parameters(), rng);
    jitter(policy.head.parameters(), rng);
    const MatrixXd target = random_matrix(2, 7, rng, 0.5);
    const auto eval = bc_loss_with_grads(policy, obs, target);
    auto loss = [&] { return bc_loss(policy, obs, target); };
    CHECK(eval.loss == doctest::Approx(loss()).epsilon(1e-14));
    CHECK(testing::gradient_error(policy.encoder.net.parameters(), eval.encoder, loss) <= 1e-4);
    CHECK(testing::gradient_error(policy.head.parameters(), eval.head, loss) <= 1e-4);
  }
}

TEST_CASE("policy actions respect the action bound") {
  Rng rng(2);
  const MatrixXd obs = random_matrix(16, 50, rng, 10.0);
  auto policy = make_policy(16, 2, 0.7, Normalizer::identity(16), ArchConfig{}, rng);
  jitter(policy.head.parameters(), rng);
  CHECK(policy.act(obs).cwiseAbs().maxCoeff() <= 0.7);
  CHECK((policy.act(obs) - policy.act_from_latent(policy.encoder.encode(obs))).norm() == 0.0);
}

TEST_CASE("normalizer whitens and keeps flat dimensions finite") {
  Rng rng(5);
  MatrixXd obs = random_matrix(3, 1000, rng, 4.0);
  obs.row(2).setConstant(1.5);
  const auto n = Normalizer::fit(obs);
  const MatrixXd w = n.apply(obs);
  CHECK(std::abs(w.row(0).mean()) < 1e-12);
  CHECK((w.row(0).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w.row(2).isZero(0));
}

TEST_CASE("cloning a zero expert yields a near-zero policy") {
  const auto d = source_domain();
  const auto data = buffers::collect_labeled(d, 10, 1, 0.3);
  Rng rng(4);
  ArchConfig arch;
  auto untrained = make_policy(16, 2, 1.0, Normalizer::fit(data.observations), arch, rng);
  BcConfig cfg;
  cfg.epochs = 10;
  const auto zero = [](const MatrixXd& s) { return MatrixXd::Zero(2, s.cols()); };
  const auto r = bc_train(data, zero, untrained, cfg, 1);
  CHECK(r.heldout_loss <= 1e-3);
  CHECK(r.heldout_loss < r.initial_heldout_loss);
}

TEST_CASE("cloned policy nearly matches the expert and its loss curve descends") {
  const auto d = source_domain();
  const auto data = buffers::collect_labeled(d, 100, 2, 0.3);
  Rng rng(8);
  auto untrained = make_policy(16, 2, 1.0, Normalizer::fit(data.observations), ArchConfig{}, rng);
  const auto expert = [&](const MatrixXd& s) { return env::expert_actions(s, d.mdp); };
  const auto r = bc_train(data, expert, untrained, BcConfig{}, 2);
  for (std::size_t e = 1; e < r.epoch_losses.size(); ++e) CHECK(r.epoch_losses[e] <= 1.05 * r.epoch_losses[e - 1]);

  const auto seeds = env::episode_seeds(77, 20);
  const auto expert_returns = env::rollout_returns(
      d, [&](const env::StepInputs& in) { return env::expert_actions(in.states, d.mdp); }, seeds);
  const auto clone_returns = env::rollout_returns(
      d, [&](const env::StepInputs& in) { return r.policy.act(in.observations); }, seeds);
  const double me = std::accumulate(expert_returns.begin(), expert_returns.end(), 0.0) / 20;
  const double mc = std::accumulate(clone_returns.begin(), clone_returns.end(), 0.0) / 20;
  // Returns are costs, so "90% of the expert" means at most 10% worse.
  CHECK(mc >= me - 0.1 * std::abs(me));
}

TEST_CASE("dynamics pretraining fits a synthetic linear latent system") {
  Rng rng(12);
  const Eigen::Index z_dim = 4;
  buffers::LatentBuffer buf(z_dim, 2, 20000);
  std::uniform_real_distribution<double> u(-1, 1), half(-0.5, 0.5);
  for (int i = 0; i < 20000; ++i) {
    Eigen::VectorXd z(z_dim), a(2);
    for (auto& v : z) v = half(rng);
    for (auto& v : a) v = u(rng);
    Eigen::VectorXd zn = z;
    zn.head(2) += 0.1 * a;
    buf.push(z, a, zn);
  }
  ArchConfig arch;
  arch.z_dim = z_dim;
  arch.hidden = 32;
  arch.forward_output = ForwardOutput::tanh;
  DynamicsConfig cfg;
  cfg.steps = 6000;
  cfg.batch_size = 128;
  const auto r = dyn_pretrain(buf, make_dynamics(z_dim, 2, arch, rng), cfg, 3);
  CHECK(r.final_heldout.total <= 1e-3);
  CHECK(r.curve.front().first == 0);
  CHECK(r.curve.back().first == cfg.steps);
}

TEST_CASE("dynamics pretraining on point-mass latents cuts the held-out loss tenfold") {
  const auto d = source_domain();
  const auto src = buffers::collect_random(d, 30, 5, 50000);
  Rng rng(6);
  ArchConfig arch;
  const auto policy = make_policy(16, 2, 1.0, Normalizer::fit(src.all().first), arch, rng);
  const auto latents = buffers::encode_source_buffer(src, policy.encoder);
  DynamicsConfig cfg;
  cfg.steps = 1500;
  cfg.batch_size = 64;
  const auto r = dyn_pretrain(latents, make_dynamics(arch.z_dim, 2, arch, rng), cfg, 1);
  CHECK(r.final_heldout.total <= 0.1 * r.initial_heldout.total);
}

TEST_CASE("inverse-only pretraining leaves the forward model untouched") {
  Rng rng(9);
  buffers::LatentBuffer buf(3, 2, 500);
  for (int i = 0; i < 500; ++i) buf.push(random_matrix(3, 1, rng), random_matrix(2, 1, rng), random_matrix(3, 1, rng));
  ArchConfig arch;
  arch.z_dim = 3;
  arch.hidden = 8;
  const auto init = make_dynamics(3, 2, arch, rng);
  DynamicsConfig cfg;
  cfg.steps = 50;
  cfg.batch_size = 16;
  cfg.train_forward = false;
  const auto r = dyn_pretrain(buf, init, cfg, 2);
  CHECK(nn::parameter_hash(r.dynamics.forward.parameters()) == nn::parameter_hash(init.forward.parameters()));
  CHECK(nn::parameter_hash(refs(r.dynamics.inverse)) != nn::parameter_hash(refs(init.inverse)));
}

TEST_CASE("policy and dynamics survive a checkpoint round trip") {
  Rng rng(10);
  const MatrixXd obs = random_matrix(16, 30, rng);
  const auto policy = make_policy(16, 2, 1.0, Normalizer::fit(obs), ArchConfig{}, rng);
  const auto dyn = make_dynamics(16, 2, ArchConfig{}, rng);
  nn::Checkpoint ck;
  put_policy(ck, policy);
  put_dynamics(ck, dyn);
  const auto back = nn::Checkpoint::deserialize(ck.serialize());
  const auto p2 = get_policy(back);
  const auto d2 = get_dynamics(back);
  CHECK(p2.act(obs) == policy.act(obs));
  const MatrixXd z = policy.encoder.encode(obs), a = random_matrix(2, 30, rng);
  CHECK(d2.forward.predict(z, a) == dyn.forward.predict(z, a));
  CHECK(dyn_loss(z, z, a, d2).total == dyn_loss(z, z, a, dyn).total);
}
