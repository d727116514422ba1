#pragma once

#include "iti/pretrain/networks.hpp"

namespace iti::pretrain {

struct DynTerms {
  bool forward = true;
  bool inverse = true;
};

struct DynLoss {
  double total = 0;    // sum of the enabled terms
  double forward = 0;  // mean |C_fwd(z, a) - z'|^2
  double inverse = 0;  // mean |C_inv(z, z') - a|^2
};

// Batch mean of |C_fwd(z_t, a_t) - z_{t+1}|^2 + |C_inv(z_t, z_{t+1}) - a_t|^2.
DynLoss dyn_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_next, const Eigen::MatrixXd& a,
                 const DynamicsBundle& dyn, DynTerms terms = {});

struct DynLossGrads {
  TensorList forward;  // empty when the forward term is disabled
  TensorList inverse;  // empty when the inverse term is disabled
  Eigen::MatrixXd z;
  Eigen::MatrixXd z_next;
};

struct DynLossEval {
  DynLoss loss;
  DynLossGrads grads;
};

// `scale` multiplies every gradient (the loss values are unscaled).
DynLossEval dyn_loss_with_grads(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z_next,
                                const Eigen::MatrixXd& a, const DynamicsBundle& dyn, DynTerms terms = {},
                                double scale = 1.0);

}  // namespace iti::pretrain
