#pragma once

#include <cmath>

#include "iti/nn/tensor.hpp"

namespace iti::nn {

template <typename Scalar>
struct RmsPropOptions {
  Scalar learning_rate = Scalar(1e-3);
  Scalar alpha = Scalar(0.99);
  Scalar epsilon = Scalar(1e-8);
};

// v <- alpha v + (1 - alpha) g^2;  p <- p - lr g / (sqrt(v) + eps)
template <typename Scalar>
class RmsProp {
 public:
  RmsProp() = default;
  explicit RmsProp(RmsPropOptions<Scalar> options) : options_(options) {
    if (!(options.learning_rate >= Scalar(0)) || !(options.alpha >= Scalar(0)) ||
        !(options.alpha < Scalar(1)) || !(options.epsilon > Scalar(0)))
      throw ConfigError("RmsProp: invalid options");
  }

  const RmsPropOptions<Scalar>& options() const { return options_; }
  void set_learning_rate(Scalar lr) { options_.learning_rate = lr; }

  // Accumulators are created as zeros on the first step.
  const TensorList<Scalar>& accumulators() const { return square_avg_; }
  TensorList<Scalar>& accumulators() { return square_avg_; }

  void step(const ParamRefs<Scalar>& params, const TensorList<Scalar>& grads) {
    check_same_shapes(as_const(params), grads, "RmsProp::step");
    if (square_avg_.empty()) {
      square_avg_ = zeros_like(as_const(params));
    } else {
      check_same_shapes(as_const(params), square_avg_, "RmsProp::step (state)");
    }
    const Scalar a = options_.alpha;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& v = square_avg_[i];
      v = (a * v.array() + (Scalar(1) - a) * grads[i].array().square()).matrix();
      params[i]->array() -=
          options_.learning_rate * grads[i].array() / (v.array().sqrt() + options_.epsilon);
    }
  }

 private:
  RmsPropOptions<Scalar> options_;
  TensorList<Scalar> square_avg_;
};

// Cosine decay from `base` at progress 0 to `floor * base` at progress 1.
template <typename Scalar>
Scalar cosine_rate(Scalar base, Scalar progress, Scalar floor) {
  const Scalar c = (Scalar(1) + std::cos(progress * Scalar(3.141592653589793))) / Scalar(2);
  return base * (floor + (Scalar(1) - floor) * c);
}

}  // namespace iti::nn
