#pragma once

#include "iti/nn/tensor.hpp"

namespace iti::nn {

// Clamp every entry to [-bound, bound].
template <typename Scalar>
void clip_params(const ParamRefs<Scalar>& params, Scalar bound) {
  if (!(bound > Scalar(0))) throw ConfigError("clip_params: bound must be positive");
  for (auto* p : params) *p = p->cwiseMax(-bound).cwiseMin(bound);
}

template <typename Scalar>
void clip_values(TensorList<Scalar>& tensors, Scalar bound) {
  if (!(bound > Scalar(0))) throw ConfigError("clip_values: bound must be positive");
  for (auto& t : tensors) t = t.cwiseMax(-bound).cwiseMin(bound);
}

template <typename Scalar>
Scalar max_abs(const ConstParamRefs<Scalar>& params) {
  Scalar m(0);
  for (const auto* p : params)
    if (p->size() > 0) m = std::max(m, p->cwiseAbs().maxCoeff());
  return m;
}

}  // namespace iti::nn
