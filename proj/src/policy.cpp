#include "iti/pretrain/networks.hpp"

namespace iti::pretrain {

using nn::MlpSpec;
using nn::Stage;

void ArchConfig::validate() const {
  if (z_dim < 1 || hidden < 1 || policy_hidden < 1 || disc_hidden < 1)
    throw ConfigError("arch: widths must be >= 1");
  if (inverse_hidden_layers < 1) throw ConfigError("arch: inverse dynamics needs a hidden layer");
}

MlpSpec encoder_spec(Eigen::Index obs_dim, const ArchConfig& a) {
  return {{obs_dim, a.hidden, a.hidden, a.z_dim}, {Stage::relu(), Stage::relu(), Stage::norm_tanh()}};
}

MlpSpec policy_head_spec(Eigen::Index action_dim, const ArchConfig& a) {
  return {{a.z_dim, a.policy_hidden, a.policy_hidden, action_dim},
          {Stage::relu(), Stage::relu(), Stage::tanh()}};
}

MlpSpec inverse_dynamics_spec(Eigen::Index action_dim, const ArchConfig& a) {
  MlpSpec s;
  s.widths.push_back(2 * a.z_dim);
  for (int i = 0; i < a.inverse_hidden_layers; ++i) {
    s.widths.push_back(a.hidden);
    s.stages.push_back(Stage::relu());
  }
  s.widths.push_back(action_dim);
  s.stages.push_back(Stage::linear());
  return s;
}

// Linear -> LN -> tanh, then a three-layer ReLU MLP to a scalar.
MlpSpec discriminator_spec(const ArchConfig& a) {
  const auto h = a.disc_hidden;
  return {{a.z_dim, h, h, h, 1}, {Stage::norm_tanh(), Stage::relu(), Stage::relu(), Stage::linear()}};
}

Normalizer Normalizer::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& obs) {
  if (obs.cols() < 2) throw ConfigError("Normalizer::fit needs at least two observations");
  Normalizer n;
  n.mean = obs.rowwise().mean();
  const Eigen::VectorXd var = (obs.colwise() - n.mean).array().square().rowwise().mean();
  n.inv_scale = var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
  return n;
}

PolicyBundle make_policy(Eigen::Index obs_dim, Eigen::Index action_dim, double action_bound,
                         const Normalizer& normalizer, const ArchConfig& arch, Rng& rng) {
  arch.validate();
  if (normalizer.mean.size() != obs_dim) throw ConfigError("make_policy: normalizer width mismatch");
  PolicyBundle p;
  p.encoder.normalizer = normalizer;
  p.encoder.net = Mlp(encoder_spec(obs_dim, arch), rng);
  p.head = Mlp(policy_head_spec(action_dim, arch), rng);
  p.action_bound = action_bound;
  return p;
}

ConstParamRefs refs(const Mlp& m) { return m.parameters(); }

void put_encoder(nn::Checkpoint& ckpt, const std::string& prefix, const Encoder& e, nn::DType dtype) {
  ckpt.put(prefix + ".normalizer.mean", e.normalizer.mean);
  ckpt.put(prefix + ".normalizer.inv_scale", e.normalizer.inv_scale);
  nn::put_mlp(ckpt, prefix + ".net", e.net, dtype);
}

Encoder get_encoder(const nn::Checkpoint& ckpt, const std::string& prefix) {
  Encoder e;
  e.normalizer.mean = ckpt.get(prefix + ".normalizer.mean").col(0);
  e.normalizer.inv_scale = ckpt.get(prefix + ".normalizer.inv_scale").col(0);
  e.net = nn::get_mlp<double>(ckpt, prefix + ".net");
  if (e.normalizer.mean.size() != e.net.input_dim())
    throw ConfigError("checkpoint: normalizer width does not match encoder");
  return e;
}

void put_policy(nn::Checkpoint& ckpt, const PolicyBundle& p, nn::DType dtype) {
  put_encoder(ckpt, "policy.encoder", p.encoder, dtype);
  nn::put_mlp(ckpt, "policy.head", p.head, dtype);
  ckpt.put("policy.action_bound", Eigen::Matrix<double, 1, 1>::Constant(p.action_bound));
}

PolicyBundle get_policy(const nn::Checkpoint& ckpt) {
  PolicyBundle p;
  p.encoder = get_encoder(ckpt, "policy.encoder");
  p.head = nn::get_mlp<double>(ckpt, "policy.head");
  p.action_bound = ckpt.get("policy.action_bound")(0, 0);
  return p;
}

}  // namespace iti::pretrain
