#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iti/nn/mlp.hpp"

namespace iti::nn {

enum class DType : std::uint8_t { f64 = 0, f32 = 1 };

struct StoredTensor {
  std::string name;
  DType dtype = DType::f64;
  std::vector<std::uint64_t> shape;
  std::vector<double> values;  // row-major; f32 entries are exactly representable
};

// Container layout (all integers and values little-endian):
//   "ITICKPT1"
//   u64 tensor count
//   per tensor: u32 name length, name bytes, u8 dtype, u32 rank, rank x u64 dims
//   per tensor, in index order: raw row-major values (f64 or f32)
class Checkpoint {
 public:
  static constexpr std::string_view kMagic = "ITICKPT1";

  template <typename Derived>
  void put(const std::string& name, const Eigen::MatrixBase<Derived>& m, DType dtype = DType::f64) {
    StoredTensor t;
    t.name = name;
    t.dtype = dtype;
    t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    t.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = static_cast<double>(m(r, c));
        t.values.push_back(dtype == DType::f32 ? static_cast<double>(static_cast<float>(v)) : v);
      }
    insert(std::move(t));
  }

  bool contains(const std::string& name) const;
  const StoredTensor& entry(const std::string& name) const;
  Eigen::MatrixXd get(const std::string& name) const;
  const std::vector<StoredTensor>& entries() const { return entries_; }

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  friend bool operator==(const Checkpoint& a, const Checkpoint& b);

 private:
  void insert(StoredTensor t);
  std::vector<StoredTensor> entries_;
};

// Networks are stored under "<prefix>.<tensor name>" plus two small tensors
// describing the topology, so a checkpoint can be loaded without a config.
template <typename Scalar>
void put_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp<Scalar>& mlp,
             DType dtype = DType::f64) {
  const auto& spec = mlp.spec();
  Eigen::RowVectorXd widths(static_cast<Eigen::Index>(spec.widths.size()));
  for (std::size_t i = 0; i < spec.widths.size(); ++i) widths(Eigen::Index(i)) = double(spec.widths[i]);
  Eigen::RowVectorXd stages(static_cast<Eigen::Index>(spec.stages.size()));
  for (std::size_t i = 0; i < spec.stages.size(); ++i)
    stages(Eigen::Index(i)) =
        double((spec.stages[i].layernorm ? 4 : 0) + static_cast<int>(spec.stages[i].activation));
  ckpt.put(prefix + ".topology.widths", widths);
  ckpt.put(prefix + ".topology.stages", stages);
  const auto names = mlp.tensor_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    ckpt.put(prefix + "." + names[i], mlp.tensors()[i], dtype);
}

template <typename Scalar>
Mlp<Scalar> get_mlp(const Checkpoint& ckpt, const std::string& prefix) {
  const Eigen::MatrixXd widths = ckpt.get(prefix + ".topology.widths");
  const Eigen::MatrixXd stages = ckpt.get(prefix + ".topology.stages");
  MlpSpec spec;
  for (Eigen::Index i = 0; i < widths.size(); ++i) spec.widths.push_back(Eigen::Index(widths(i)));
  for (Eigen::Index i = 0; i < stages.size(); ++i) {
    const int code = int(stages(i));
    if (code < 0 || code > 6 || (code & 3) > 2)
      throw ConfigError("checkpoint: bad stage code under " + prefix);
    spec.stages.push_back({(code & 4) != 0, static_cast<Activation>(code & 3)});
  }
  auto mlp = Mlp<Scalar>::zeros(spec);
  const auto names = mlp.tensor_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Eigen::MatrixXd t = ckpt.get(prefix + "." + names[i]);
    auto& dst = mlp.tensors()[i];
    if (t.rows() != dst.rows() || t.cols() != dst.cols())
      throw ConfigError("checkpoint: shape mismatch for " + prefix + "." + names[i]);
    dst = t.cast<Scalar>();
  }
  return mlp;
}

}  // namespace iti::nn
