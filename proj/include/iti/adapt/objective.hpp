#pragma once

#include "iti/buffers/replay_buffer.hpp"
#include "iti/nn/rmsprop.hpp"
#include "iti/pretrain/dynamics_loss.hpp"

namespace iti::adapt {

using pretrain::ConstParamRefs;
using pretrain::DynamicsBundle;
using pretrain::Encoder;
using pretrain::Mlp;
using pretrain::ParamRefs;
using pretrain::TensorList;

enum class ClipMode { weights, gradients };

struct AdaptConfig {
  int steps = 20000;
  Eigen::Index batch_size = 256;
  int disc_updates = 5;  // critic steps per encoder step
  double clip = 0.01;
  ClipMode clip_mode = ClipMode::weights;
  double encoder_lr = 1e-4;
  double disc_lr = 1e-4;
  // Reported only; the dynamics networks stay frozen during adaptation.
  double dynamics_lr = 1e-6;
  double rms_alpha = 0.99;
  double rms_epsilon = 1e-8;
  bool use_adv = true;
  bool use_fwd = true;
  bool use_inv = true;
  double adv_weight = 1.0;
  double dyn_weight = 1.0;
  int log_every = 100;
  int eval_every = 500;
  double divergence_bound = 1e3;
  // Stop once this many consecutive log records fail to lower the logged
  // objective by early_stop_tolerance (relative); 0 disables.
  int early_stop_patience = 0;
  double early_stop_tolerance = 1e-3;

  void validate() const;
  pretrain::DynTerms dyn_terms() const { return {use_fwd, use_inv}; }
};

// Wasserstein-style critic: scalar output, unconstrained range.
Mlp make_discriminator(const pretrain::ArchConfig& arch, Rng& rng);

// J_adv = E[D(z_src)] + E[1 - D(z_tgt)]
double adv_value_latent(const Eigen::MatrixXd& z_src, const Eigen::MatrixXd& z_tgt, const Mlp& disc);
double adv_value(const Eigen::MatrixXd& z_src, const Eigen::MatrixXd& o_tgt, const Encoder& encoder,
                 const Mlp& disc);

// Gradient of -J_adv with respect to the critic parameters.
struct CriticEval {
  double j_adv = 0;
  TensorList grads;
};
CriticEval critic_descent_grads(const Eigen::MatrixXd& z_src, const Eigen::MatrixXd& z_tgt, const Mlp& disc);

// One ascent step on J_adv for D (descent on -J_adv), then clipping.
// Returns J_adv before the step.
double discriminator_update(const AdaptConfig& config, const Eigen::MatrixXd& z_src,
                            const Eigen::MatrixXd& o_tgt, Mlp& disc, const Encoder& encoder,
                            nn::RmsProp<double>& opt);

// How the target half of J_adv is differentiated: as written, through
// (1 - D), or through the constant-free Wasserstein form (-D).
enum class AdvForm { as_written, constant_free };

struct EncoderObjective {
  double j_adv = 0;  // always evaluated, even when the term is switched off
  pretrain::DynLoss j_dyn;
  double total = 0;  // the value actually minimized
  TensorList grads;  // w.r.t. the encoder network
};

// (adv_weight J_adv if use_adv) + (dyn_weight J_dyn over the enabled terms)
// on target transitions, differentiated w.r.t. theta_F only.
EncoderObjective encoder_objective(const AdaptConfig& config, const Eigen::MatrixXd& z_src,
                                   const buffers::TransitionBatch& target, const Encoder& encoder,
                                   const Mlp& disc, const DynamicsBundle& dyn,
                                   AdvForm form = AdvForm::as_written);

// Single optimizer step on the combined objective; a no-op when every
// ablation flag is off.
EncoderObjective encoder_update(const AdaptConfig& config, const Eigen::MatrixXd& z_src,
                                const buffers::TransitionBatch& target, Encoder& encoder, const Mlp& disc,
                                const DynamicsBundle& dyn, nn::RmsProp<double>& opt);

}  // namespace iti::adapt
