#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "iti/errors.hpp"

namespace iti::nn {

// Batches are stored feature-major: one sample per column.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Every trainable thing exposes its tensors as an ordered list; gradients
// and optimizer accumulators use the same order and shapes.
template <typename Scalar>
using TensorList = std::vector<Matrix<Scalar>>;

template <typename Scalar>
using ParamRefs = std::vector<Matrix<Scalar>*>;

template <typename Scalar>
using ConstParamRefs = std::vector<const Matrix<Scalar>*>;

template <typename Scalar>
TensorList<Scalar> zeros_like(const ConstParamRefs<Scalar>& params) {
  TensorList<Scalar> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
  return out;
}

template <typename Scalar>
void check_same_shapes(const ConstParamRefs<Scalar>& params, const TensorList<Scalar>& grads,
                       const char* where) {
  if (params.size() != grads.size())
    throw ConfigError(std::string(where) + ": tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols())
      throw ConfigError(std::string(where) + ": shape mismatch at tensor " + std::to_string(i));
  }
}

template <typename Scalar>
bool all_finite(const TensorList<Scalar>& tensors) {
  for (const auto& t : tensors)
    if (!t.allFinite()) return false;
  return true;
}

template <typename Scalar>
ConstParamRefs<Scalar> as_const(const ParamRefs<Scalar>& refs) {
  return ConstParamRefs<Scalar>(refs.begin(), refs.end());
}

// FNV-1a over the raw bytes of every tensor, shapes included.
template <typename Scalar>
std::uint64_t parameter_hash(const ConstParamRefs<Scalar>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* p : params) {
    const std::int64_t shape[2] = {p->rows(), p->cols()};
    mix(shape, sizeof(shape));
    mix(p->data(), sizeof(Scalar) * static_cast<std::size_t>(p->size()));
  }
  return h;
}

template <typename Scalar>
void add_scaled(TensorList<Scalar>& acc, const TensorList<Scalar>& g, Scalar scale) {
  if (acc.size() != g.size()) throw ConfigError("add_scaled: tensor count mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * g[i];
}

}  // namespace iti::nn
