#pragma once

#include <Eigen/Dense>

#include <string>

#include "iti/buffers/replay_buffer.hpp"
#include "iti/nn/checkpoint.hpp"
#include "iti/nn/mlp.hpp"

namespace iti::pretrain {

using Mlp = nn::Mlp<double>;
using TensorList = nn::TensorList<double>;
using ParamRefs = nn::ParamRefs<double>;
using ConstParamRefs = nn::ConstParamRefs<double>;

enum class ForwardOutput { layernorm_tanh, tanh };

// Desk-scale widths. The large-scale values (latent 100, hidden 1024,
// discriminator hidden 100, four inverse-dynamics hidden layers) are one
// config override away.
struct ArchConfig {
  Eigen::Index z_dim = 16;
  Eigen::Index hidden = 64;
  Eigen::Index policy_hidden = 64;
  Eigen::Index disc_hidden = 64;
  int inverse_hidden_layers = 3;
  ForwardOutput forward_output = ForwardOutput::layernorm_tanh;

  void validate() const;
};

nn::MlpSpec encoder_spec(Eigen::Index obs_dim, const ArchConfig& arch);
nn::MlpSpec policy_head_spec(Eigen::Index action_dim, const ArchConfig& arch);
nn::MlpSpec inverse_dynamics_spec(Eigen::Index action_dim, const ArchConfig& arch);
nn::MlpSpec discriminator_spec(const ArchConfig& arch);

// Per-dimension affine whitening fitted on source observations and reused
// verbatim in every target domain.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_scale;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& obs) const {
    return ((obs.colwise() - mean).array().colwise() * inv_scale.array()).matrix();
  }
  static Normalizer identity(Eigen::Index dim);
  static Normalizer fit(const Eigen::MatrixXd& obs);
};

// F: observation -> latent. Only `net` is trainable.
struct Encoder {
  Normalizer normalizer;
  Mlp net;

  Eigen::Index input_dim() const { return net.input_dim(); }
  Eigen::Index output_dim() const { return net.output_dim(); }
  Eigen::MatrixXd encode(const Eigen::MatrixXd& obs) const { return net.predict(normalizer.apply(obs)); }
};

// pi(o) = head(F(o)), head output squashed by tanh and scaled to the action box.
struct PolicyBundle {
  Encoder encoder;
  Mlp head;
  double action_bound = 1.0;

  Eigen::MatrixXd act_from_latent(const Eigen::MatrixXd& z) const { return action_bound * head.predict(z); }
  Eigen::MatrixXd act(const Eigen::MatrixXd& obs) const { return act_from_latent(encoder.encode(obs)); }
};

PolicyBundle make_policy(Eigen::Index obs_dim, Eigen::Index action_dim, double action_bound,
                         const Normalizer& normalizer, const ArchConfig& arch, Rng& rng);

// C_fwd(z, a): separate latent and action branches, concatenated, then a trunk.
class ForwardDynamics {
 public:
  ForwardDynamics() = default;
  ForwardDynamics(Eigen::Index z_dim, Eigen::Index action_dim, const ArchConfig& arch, Rng& rng);
  ForwardDynamics(Mlp latent_branch, Mlp action_branch, Mlp trunk);

  const Mlp& latent_branch() const { return latent_; }
  const Mlp& action_branch() const { return action_; }
  const Mlp& trunk() const { return trunk_; }

  Eigen::Index z_dim() const { return latent_.input_dim(); }
  Eigen::Index action_dim() const { return action_.input_dim(); }

  ParamRefs parameters();
  ConstParamRefs parameters() const;

  Eigen::MatrixXd predict(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) const;

  struct Tape {
    nn::Tape<double> latent, action, trunk;
  };
  struct Traced {
    Eigen::MatrixXd output;
    Tape tape;
  };
  Traced forward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) const;

  struct Grads {
    TensorList params;  // same order as parameters()
    Eigen::MatrixXd z;
    Eigen::MatrixXd action;
  };
  static Grads backward(const Tape& tape, const Eigen::MatrixXd& upstream);

 private:
  Mlp latent_, action_, trunk_;
};

// C_inv(z, z') on the stacked input [z; z'].
struct DynamicsBundle {
  ForwardDynamics forward;
  Mlp inverse;
};

DynamicsBundle make_dynamics(Eigen::Index z_dim, Eigen::Index action_dim, const ArchConfig& arch, Rng& rng);

ConstParamRefs refs(const Mlp& m);

void put_policy(nn::Checkpoint& ckpt, const PolicyBundle& p, nn::DType dtype = nn::DType::f64);
PolicyBundle get_policy(const nn::Checkpoint& ckpt);
void put_encoder(nn::Checkpoint& ckpt, const std::string& prefix, const Encoder& e,
                 nn::DType dtype = nn::DType::f64);
Encoder get_encoder(const nn::Checkpoint& ckpt, const std::string& prefix);
void put_dynamics(nn::Checkpoint& ckpt, const DynamicsBundle& d, nn::DType dtype = nn::DType::f64);
DynamicsBundle get_dynamics(const nn::Checkpoint& ckpt);

}  // namespace iti::pretrain
