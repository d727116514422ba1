#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "iti/errors.hpp"
#include "iti/nn/tensor.hpp"
#include "iti/rng.hpp"

namespace iti::nn {

enum class Activation { identity, relu, tanh };

// What happens between one linear map and the next: an optional layernorm
// (with learned gain/offset) followed by a pointwise nonlinearity.
struct Stage {
  bool layernorm = false;
  Activation activation = Activation::identity;

  static constexpr Stage linear() { return {false, Activation::identity}; }
  static constexpr Stage relu() { return {false, Activation::relu}; }
  static constexpr Stage tanh() { return {false, Activation::tanh}; }
  static constexpr Stage norm() { return {true, Activation::identity}; }
  static constexpr Stage norm_tanh() { return {true, Activation::tanh}; }

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct MlpSpec {
  std::vector<Eigen::Index> widths;  // input width first
  std::vector<Stage> stages;         // one per linear layer

  Eigen::Index input_dim() const { return widths.front(); }
  Eigen::Index output_dim() const { return widths.back(); }
  std::size_t layer_count() const { return stages.size(); }

  void validate() const {
    if (widths.size() < 2) throw ConfigError("MlpSpec: need at least two widths");
    if (stages.size() != widths.size() - 1)
      throw ConfigError("MlpSpec: stage count must equal layer count");
    for (auto w : widths)
      if (w < 1) throw ConfigError("MlpSpec: widths must be >= 1");
  }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

inline constexpr double kLayerNormEpsilon = 1e-5;

template <typename Scalar>
struct Tape {
  MlpSpec spec;
  TensorList<Scalar> params;  // snapshot of the weights the forward pass used
  std::vector<Matrix<Scalar>> inputs;
  std::vector<Matrix<Scalar>> normalized;  // layernorm xhat, empty when unused
  std::vector<Matrix<Scalar>> inv_std;     // 1 x batch
  std::vector<Matrix<Scalar>> activated;   // stage output
  std::vector<Matrix<Scalar>> pre_activation;

  bool empty() const { return inputs.empty(); }
  Eigen::Index batch() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

template <typename Scalar>
struct Gradients {
  TensorList<Scalar> params;
  Matrix<Scalar> input;
};

// Feed-forward network; tensor order is, per layer: weight, bias, and when
// the stage has a layernorm, gain then offset.
template <typename Scalar>
class Mlp {
 public:
  using MatrixType = Matrix<Scalar>;

  Mlp() = default;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, unit gains.
  Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
    spec_.validate();
    allocate();
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const Scalar bound = Scalar(1) / std::sqrt(Scalar(spec_.widths[l]));
      std::uniform_real_distribution<double> dist(-double(bound), double(bound));
      auto& w = tensors_[offsets_[l]];
      // Row-major fill so the draw order matches the checkpoint layout.
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = Scalar(dist(rng));
    }
  }

  static Mlp zeros(MlpSpec spec) {
    Mlp m;
    m.spec_ = std::move(spec);
    m.spec_.validate();
    m.allocate();
    for (std::size_t l = 0; l < m.spec_.layer_count(); ++l)
      if (m.spec_.stages[l].layernorm) m.tensors_[m.offsets_[l] + 2].setZero();
    return m;
  }

  const MlpSpec& spec() const { return spec_; }
  Eigen::Index input_dim() const { return spec_.input_dim(); }
  Eigen::Index output_dim() const { return spec_.output_dim(); }
  std::size_t layer_count() const { return spec_.layer_count(); }

  MatrixType& weight(std::size_t l) { return tensors_[offsets_[l]]; }
  const MatrixType& weight(std::size_t l) const { return tensors_[offsets_[l]]; }
  MatrixType& bias(std::size_t l) { return tensors_[offsets_[l] + 1]; }
  const MatrixType& bias(std::size_t l) const { return tensors_[offsets_[l] + 1]; }
  MatrixType& gain(std::size_t l) { return tensors_.at(ln_index(l)); }
  const MatrixType& gain(std::size_t l) const { return tensors_.at(ln_index(l)); }
  MatrixType& offset(std::size_t l) { return tensors_.at(ln_index(l) + 1); }
  const MatrixType& offset(std::size_t l) const { return tensors_.at(ln_index(l) + 1); }

  TensorList<Scalar>& tensors() { return tensors_; }
  const TensorList<Scalar>& tensors() const { return tensors_; }

  ParamRefs<Scalar> parameters() {
    ParamRefs<Scalar> out;
    for (auto& t : tensors_) out.push_back(&t);
    return out;
  }
  ConstParamRefs<Scalar> parameters() const {
    ConstParamRefs<Scalar> out;
    for (const auto& t : tensors_) out.push_back(&t);
    return out;
  }

  std::vector<std::string> tensor_names() const {
    std::vector<std::string> names;
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const std::string p = "l" + std::to_string(l) + ".";
      names.push_back(p + "weight");
      names.push_back(p + "bias");
      if (spec_.stages[l].layernorm) {
        names.push_back(p + "ln_gain");
        names.push_back(p + "ln_offset");
      }
    }
    return names;
  }

  MatrixType predict(const MatrixType& input) const { return run(input, nullptr); }

  struct Traced {
    MatrixType output;
    Tape<Scalar> tape;
  };

  Traced forward(const MatrixType& input) const {
    Traced t;
    t.output = run(input, &t.tape);
    return t;
  }

  // Same network with every tensor converted to another scalar type.
  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out = Mlp<Other>::zeros(spec_);
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      out.tensors()[i] = tensors_[i].template cast<Other>();
    return out;
  }

 private:
  void allocate() {
    tensors_.clear();
    offsets_.clear();
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const auto in = spec_.widths[l];
      const auto out = spec_.widths[l + 1];
      offsets_.push_back(tensors_.size());
      tensors_.push_back(MatrixType::Zero(out, in));
      tensors_.push_back(MatrixType::Zero(out, 1));
      if (spec_.stages[l].layernorm) {
        tensors_.push_back(MatrixType::Ones(out, 1));
        tensors_.push_back(MatrixType::Zero(out, 1));
      }
    }
  }

  std::size_t ln_index(std::size_t l) const {
    if (!spec_.stages.at(l).layernorm) throw UsageError("layer has no layernorm");
    return offsets_[l] + 2;
  }

  MatrixType run(const MatrixType& input, Tape<Scalar>* tape) const {
    if (tensors_.empty()) throw UsageError("Mlp: forward on an empty network");
    if (input.rows() != spec_.input_dim())
      throw ConfigError("Mlp: input width " + std::to_string(input.rows()) + " != " +
                        std::to_string(spec_.input_dim()));
    if (tape) {
      *tape = Tape<Scalar>{};
      tape->spec = spec_;
      tape->params = tensors_;
    }
    MatrixType x = input;
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const Stage& st = spec_.stages[l];
      MatrixType h = weight(l) * x;
      h.colwise() += bias(l).col(0);
      MatrixType xhat, inv;
      if (st.layernorm) {
        const auto n = Scalar(h.rows());
        const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = h.colwise().sum() / n;
        h.rowwise() -= mean;
        inv = ((h.array().square().colwise().sum() / n) + Scalar(kLayerNormEpsilon))
                  .rsqrt()
                  .matrix();
        xhat = h.array().rowwise() * inv.row(0).array();
        h = (xhat.array().colwise() * gain(l).col(0).array()).matrix();
        h.colwise() += offset(l).col(0);
      }
      MatrixType y;
      switch (st.activation) {
        case Activation::identity: y = h; break;
        case Activation::relu: y = h.cwiseMax(Scalar(0)); break;
        case Activation::tanh: y = h.array().tanh().matrix(); break;
      }
      if (tape) {
        tape->inputs.push_back(std::move(x));
        tape->normalized.push_back(std::move(xhat));
        tape->inv_std.push_back(std::move(inv));
        tape->pre_activation.push_back(std::move(h));
        tape->activated.push_back(y);
      }
      x = std::move(y);
    }
    return x;
  }

  MlpSpec spec_;
  TensorList<Scalar> tensors_;
  std::vector<std::size_t> offsets_;
};

// Reverse pass. `upstream` is dLoss/dOutput; parameter gradients are summed
// over the batch, so a mean loss must already carry its 1/batch factor.
template <typename Scalar>
Gradients<Scalar> backward(const Tape<Scalar>& tape, const std::type_identity_t<Matrix<Scalar>>& upstream) {
  if (tape.empty()) throw UsageError("backward: empty tape");
  const auto& last = tape.activated.back();
  if (upstream.rows() != last.rows() || upstream.cols() != last.cols())
    throw UsageError("backward: upstream gradient does not match the recorded output");

  Gradients<Scalar> g;
  g.params.resize(tape.params.size());
  std::vector<std::size_t> offsets;
  {
    std::size_t k = 0;
    for (const auto& st : tape.spec.stages) {
      offsets.push_back(k);
      k += st.layernorm ? 4 : 2;
    }
    if (k != tape.params.size()) throw UsageError("backward: tape parameters are inconsistent");
  }

  Matrix<Scalar> d = upstream;
  for (std::size_t l = tape.spec.layer_count(); l-- > 0;) {
    const Stage& st = tape.spec.stages[l];
    const std::size_t o = offsets[l];
    switch (st.activation) {
      case Activation::identity: break;
      case Activation::relu:
        d = (tape.pre_activation[l].array() > Scalar(0)).select(d, Scalar(0));
        break;
      case Activation::tanh:
        d = (d.array() * (Scalar(1) - tape.activated[l].array().square())).matrix();
        break;
    }
    if (st.layernorm) {
      const auto& xhat = tape.normalized[l];
      const auto& gain = tape.params[o + 2];
      g.params[o + 2] = (d.array() * xhat.array()).rowwise().sum().matrix();
      g.params[o + 3] = d.rowwise().sum();
      const Matrix<Scalar> dxhat = (d.array().colwise() * gain.col(0).array()).matrix();
      const auto n = Scalar(d.rows());
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean_d = dxhat.colwise().sum() / n;
      const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean_dx =
          (dxhat.array() * xhat.array()).colwise().sum() / n;
      Matrix<Scalar> dh = dxhat;
      dh.rowwise() -= mean_d;
      dh -= (xhat.array().rowwise() * mean_dx.array()).matrix();
      d = (dh.array().rowwise() * tape.inv_std[l].row(0).array()).matrix();
    }
    g.params[o] = d * tape.inputs[l].transpose();
    g.params[o + 1] = d.rowwise().sum();
    d = tape.params[o].transpose() * d;
  }
  g.input = std::move(d);
  return g;
}

}  // namespace iti::nn
