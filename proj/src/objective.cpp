#include "iti/adapt/objective.hpp"

#include <cmath>

#include "iti/nn/clip.hpp"

namespace iti::adapt {

void AdaptConfig::validate() const {
  if (steps < 0) throw ConfigError("adapt: steps must be >= 0");
  if (batch_size < 1) throw ConfigError("adapt: batch_size must be >= 1");
  if (disc_updates < 1) throw ConfigError("adapt: disc_updates must be >= 1");
  if (!(clip > 0)) throw ConfigError("adapt: clip must be positive");
  if (!(encoder_lr > 0) || !(disc_lr > 0) || !(dynamics_lr > 0))
    throw ConfigError("adapt: learning rates must be positive");
  if (!(rms_alpha >= 0 && rms_alpha < 1) || !(rms_epsilon > 0)) throw ConfigError("adapt: bad RMSProp constants");
  if (!(adv_weight >= 0) || !(dyn_weight >= 0)) throw ConfigError("adapt: loss weights must be >= 0");
  if (log_every < 1 || eval_every < 1) throw ConfigError("adapt: log/eval cadence must be >= 1");
  if (!(divergence_bound > 0)) throw ConfigError("adapt: divergence bound must be positive");
  if (early_stop_patience < 0 || !(early_stop_tolerance >= 0)) throw ConfigError("adapt: bad early-stop settings");
}

Mlp make_discriminator(const pretrain::ArchConfig& arch, Rng& rng) {
  return Mlp(pretrain::discriminator_spec(arch), rng);
}

double adv_value_latent(const Eigen::MatrixXd& z_src, const Eigen::MatrixXd& z_tgt, const Mlp& disc) {
  if (z_src.cols() == 0 || z_tgt.cols() == 0) throw ConfigError("adv_value: empty batch");
  return disc.predict(z_src).mean() + (1.0 - disc.predict(z_tgt).array()).mean();
}

double adv_value(const Eigen::MatrixXd& z_src, const Eigen::MatrixXd& o_tgt, const Encoder& encoder,
                 const Mlp& disc) {
  return adv_value_latent(z_src, encoder.encode(o_tgt), disc);
}

CriticEval critic_descent_grads(const Eigen::MatrixXd& z_src, const Eigen::MatrixXd& z_tgt, const Mlp& disc) {
  if (z_src.cols() == 0 || z_tgt.cols() == 0) throw ConfigError("critic: empty batch");
  const auto src = disc.forward(z_src);
  const auto tgt = disc.forward(z_tgt);
  CriticEval out;
  out.j_adv = src.output.mean() + (1.0 - tgt.output.array()).mean();
  const double ns = double(z_src.cols()), nt = double(z_tgt.cols());
  // d(-J)/dD(z_src) = -1/ns;  d(-J)/dD(z_tgt) = +1/nt
  auto gs = nn::backward(src.tape, Eigen::MatrixXd::Constant(1, z_src.cols(), -1.0 / ns));
  auto gt = nn::backward(tgt.tape, Eigen::MatrixXd::Constant(1, z_tgt.cols(), 1.0 / nt));
  out.grads = std::move(gs.params);
  nn::add_scaled(out.grads, gt.params, 1.0);
  return out;
}

double discriminator_update(const AdaptConfig& config, const Eigen::MatrixXd& z_src,
                            const Eigen::MatrixXd& o_tgt, Mlp& disc, const Encoder& encoder,
                            nn::RmsProp<double>& opt) {
  auto eval = critic_descent_grads(z_src, encoder.encode(o_tgt), disc);
  if (!std::isfinite(eval.j_adv) || !nn::all_finite(eval.grads))
    throw TrainingError("discriminator_update: non-finite critic loss");
  if (config.clip_mode == ClipMode::gradients) nn::clip_values(eval.grads, config.clip);
  opt.step(disc.parameters(), eval.grads);
  if (config.clip_mode == ClipMode::weights) nn::clip_params(disc.parameters(), config.clip);
  return eval.j_adv;
}

EncoderObjective encoder_objective(const AdaptConfig& config, const Eigen::MatrixXd& z_src,
                                   const buffers::TransitionBatch& target, const Encoder& encoder,
                                   const Mlp& disc, const DynamicsBundle& dyn, AdvForm form) {
  const auto n = target.size();
  if (n == 0 || z_src.cols() == 0) throw ConfigError("encoder_objective: empty batch");
  Eigen::MatrixXd obs(target.first.rows(), 2 * n);
  obs << target.first, target.next;
  const auto enc = encoder.net.forward(encoder.normalizer.apply(obs));
  const Eigen::MatrixXd z_t = enc.output.leftCols(n);
  const Eigen::MatrixXd z_next = enc.output.rightCols(n);

  EncoderObjective out;
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(enc.output.rows(), 2 * n);

  const double src_term = disc.predict(z_src).mean();
  const auto d_tgt = disc.forward(z_t);
  // Derivative of the per-sample target term with respect to D(z_tgt).
  double slope = 0;
  if (form == AdvForm::as_written) {
    out.j_adv = src_term + (1.0 - d_tgt.output.array()).mean();
    slope = -1.0;  // d(1 - y)/dy
  } else {
    out.j_adv = 1.0 + src_term - d_tgt.output.mean();
    slope = -1.0;  // d(-y)/dy
  }
  if (config.use_adv) {
    const Eigen::MatrixXd up = Eigen::MatrixXd::Constant(1, n, config.adv_weight * slope / double(n));
    dz.leftCols(n) += nn::backward(d_tgt.tape, up).input;
  }

  const auto terms = config.dyn_terms();
  if (terms.forward || terms.inverse) {
    auto dl = pretrain::dyn_loss_with_grads(z_t, z_next, target.action, dyn, terms, config.dyn_weight);
    out.j_dyn = dl.loss;
    dz.leftCols(n) += dl.grads.z;
    dz.rightCols(n) += dl.grads.z_next;
  }
  out.total = (config.use_adv ? config.adv_weight * out.j_adv : 0.0) + config.dyn_weight * out.j_dyn.total;
  out.grads = nn::backward(enc.tape, dz).params;
  return out;
}

EncoderObjective encoder_update(const AdaptConfig& config, const Eigen::MatrixXd& z_src,
                                const buffers::TransitionBatch& target, Encoder& encoder, const Mlp& disc,
                                const DynamicsBundle& dyn, nn::RmsProp<double>& opt) {
  auto obj = encoder_objective(config, z_src, target, encoder, disc, dyn);
  if (!std::isfinite(obj.total) || !std::isfinite(obj.j_adv) || !nn::all_finite(obj.grads))
    throw TrainingError("encoder_update: non-finite objective");
  if (config.use_adv || config.use_fwd || config.use_inv) opt.step(encoder.net.parameters(), obj.grads);
  return obj;
}

}  // namespace iti::adapt
