#include "iti/pretrain/dynamics_loss.hpp"

namespace iti::pretrain {

using nn::MlpSpec;
using nn::Stage;

ForwardDynamics::ForwardDynamics(Eigen::Index z_dim, Eigen::Index action_dim, const ArchConfig& arch,
                                 Rng& rng) {
  const auto h = arch.hidden;
  // Latent: three layers, layernorm after the first and ReLU after the rest.
  latent_ = Mlp(MlpSpec{{z_dim, h, h, h}, {Stage::norm(), Stage::relu(), Stage::relu()}}, rng);
  // Action: linear -> LN, linear -> ReLU.
  action_ = Mlp(MlpSpec{{action_dim, h, h}, {Stage::norm(), Stage::relu()}}, rng);
  // Trunk: four linear layers with ReLU between them, ending in LN + tanh.
  const Stage out = arch.forward_output == ForwardOutput::layernorm_tanh ? Stage::norm_tanh() : Stage::tanh();
  trunk_ = Mlp(MlpSpec{{2 * h, h, h, h, z_dim}, {Stage::relu(), Stage::relu(), Stage::relu(), out}}, rng);
}

ForwardDynamics::ForwardDynamics(Mlp latent_branch, Mlp action_branch, Mlp trunk)
    : latent_(std::move(latent_branch)), action_(std::move(action_branch)), trunk_(std::move(trunk)) {
  if (trunk_.input_dim() != latent_.output_dim() + action_.output_dim())
    throw ConfigError("ForwardDynamics: trunk input must equal the concatenated branch widths");
  if (trunk_.output_dim() != latent_.input_dim())
    throw ConfigError("ForwardDynamics: trunk output must equal the latent width");
}

ParamRefs ForwardDynamics::parameters() {
  ParamRefs out = latent_.parameters();
  for (auto* p : action_.parameters()) out.push_back(p);
  for (auto* p : trunk_.parameters()) out.push_back(p);
  return out;
}

ConstParamRefs ForwardDynamics::parameters() const {
  ConstParamRefs out = latent_.parameters();
  for (const auto* p : action_.parameters()) out.push_back(p);
  for (const auto* p : trunk_.parameters()) out.push_back(p);
  return out;
}

Eigen::MatrixXd ForwardDynamics::predict(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) const {
  Eigen::MatrixXd cat(trunk_.input_dim(), z.cols());
  cat << latent_.predict(z), action_.predict(a);
  return trunk_.predict(cat);
}

ForwardDynamics::Traced ForwardDynamics::forward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) const {
  if (z.cols() != a.cols()) throw ConfigError("ForwardDynamics: batch size mismatch");
  Traced t;
  auto lz = latent_.forward(z);
  auto la = action_.forward(a);
  Eigen::MatrixXd cat(trunk_.input_dim(), z.cols());
  cat << lz.output, la.output;
  auto tr = trunk_.forward(cat);
  t.output = std::move(tr.output);
  t.tape = {std::move(lz.tape), std::move(la.tape), std::move(tr.tape)};
  return t;
}

ForwardDynamics::Grads ForwardDynamics::backward(const Tape& tape, const Eigen::MatrixXd& upstream) {
  auto gt = nn::backward(tape.trunk, upstream);
  const auto hz = tape.latent.activated.back().rows();
  const auto ha = tape.action.activated.back().rows();
  auto gl = nn::backward(tape.latent, gt.input.topRows(hz));
  auto ga = nn::backward(tape.action, gt.input.bottomRows(ha));
  Grads g;
  g.params = std::move(gl.params);
  for (auto& m : ga.params) g.params.push_back(std::move(m));
  for (auto& m : gt.params) g.params.push_back(std::move(m));
  g.z = std::move(gl.input);
  g.action = std::move(ga.input);
  return g;
}

DynamicsBundle make_dynamics(Eigen::Index z_dim, Eigen::Index action_dim, const ArchConfig& arch, Rng& rng) {
  arch.validate();
  DynamicsBundle d;
  d.forward = ForwardDynamics(z_dim, action_dim, arch, rng);
  d.inverse = Mlp(inverse_dynamics_spec(action_dim, arch), rng);
  return d;
}

void put_dynamics(nn::Checkpoint& ckpt, const DynamicsBundle& d, nn::DType dtype) {
  nn::put_mlp(ckpt, "dynamics.forward.latent", d.forward.latent_branch(), dtype);
  nn::put_mlp(ckpt, "dynamics.forward.action", d.forward.action_branch(), dtype);
  nn::put_mlp(ckpt, "dynamics.forward.trunk", d.forward.trunk(), dtype);
  nn::put_mlp(ckpt, "dynamics.inverse", d.inverse, dtype);
}

DynamicsBundle get_dynamics(const nn::Checkpoint& ckpt) {
  DynamicsBundle d;
  d.forward = ForwardDynamics(nn::get_mlp<double>(ckpt, "dynamics.forward.latent"),
                              nn::get_mlp<double>(ckpt, "dynamics.forward.action"),
                              nn::get_mlp<double>(ckpt, "dynamics.forward.trunk"));
  d.inverse = nn::get_mlp<double>(ckpt, "dynamics.inverse");
  return d;
}

namespace {

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd s(top.rows() + bottom.rows(), top.cols());
  s << top, bottom;
  return s;
}

void check_batch(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_next, const Eigen::MatrixXd& a,
                 const DynamicsBundle& dyn) {
  if (z.cols() != z_next.cols() || z.cols() != a.cols() || z.cols() == 0)
    throw ConfigError("dyn_loss: batch sizes disagree");
  if (z.rows() != dyn.forward.z_dim() || z_next.rows() != z.rows() || a.rows() != dyn.forward.action_dim())
    throw ConfigError("dyn_loss: widths do not match the dynamics networks");
}

}  // namespace

DynLoss dyn_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_next, const Eigen::MatrixXd& a,
                 const DynamicsBundle& dyn, DynTerms terms) {
  check_batch(z, z_next, a, dyn);
  const double n = double(z.cols());
  DynLoss l;
  if (terms.forward) l.forward = (dyn.forward.predict(z, a) - z_next).squaredNorm() / n;
  if (terms.inverse) l.inverse = (dyn.inverse.predict(stack(z, z_next)) - a).squaredNorm() / n;
  l.total = l.forward + l.inverse;
  return l;
}

DynLossEval dyn_loss_with_grads(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_next,
                                const Eigen::MatrixXd& a, const DynamicsBundle& dyn, DynTerms terms,
                                double scale) {
  check_batch(z, z_next, a, dyn);
  const double n = double(z.cols());
  DynLossEval out;
  out.grads.z = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  out.grads.z_next = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  if (terms.forward) {
    auto f = dyn.forward.forward(z, a);
    const Eigen::MatrixXd r = f.output - z_next;
    out.loss.forward = r.squaredNorm() / n;
    const Eigen::MatrixXd up = (2.0 * scale / n) * r;
    auto g = ForwardDynamics::backward(f.tape, up);
    out.grads.forward = std::move(g.params);
    out.grads.z += g.z;
    out.grads.z_next -= up;
  }
  if (terms.inverse) {
    auto f = dyn.inverse.forward(stack(z, z_next));
    const Eigen::MatrixXd r = f.output - a;
    out.loss.inverse = r.squaredNorm() / n;
    auto g = nn::backward(f.tape, Eigen::MatrixXd((2.0 * scale / n) * r));
    out.grads.inverse = std::move(g.params);
    out.grads.z += g.input.topRows(z.rows());
    out.grads.z_next += g.input.bottomRows(z.rows());
  }
  out.loss.total = out.loss.forward + out.loss.inverse;
  return out;
}

}  // namespace iti::pretrain
