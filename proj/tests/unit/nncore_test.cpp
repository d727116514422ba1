#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "../support/gradcheck.hpp"
#include "iti/nn/checkpoint.hpp"
#include "iti/nn/clip.hpp"
#include "iti/nn/mlp.hpp"
#include "iti/nn/rmsprop.hpp"

using namespace iti;
using namespace iti::nn;
using Eigen::MatrixXd;

namespace {

MlpSpec random_spec(Rng& rng, int max_layers = 3, int max_width = 16) {
  std::uniform_int_distribution<int> layers(1, max_layers), width(1, max_width), kind(0, 4);
  MlpSpec s;
  const int n = layers(rng);
  s.widths.push_back(width(rng));
  for (int l = 0; l < n; ++l) {
    s.widths.push_back(width(rng));
    const Stage options[] = {Stage::linear(), Stage::relu(), Stage::tanh(), Stage::norm(), Stage::norm_tanh()};
    Stage st = options[kind(rng)];
    // Layernorm over a single unit is constant and has no gradient to test.
    if (s.widths.back() < 2) st.layernorm = false;
    s.stages.push_back(st);
  }
  return s;
}

void jitter_norm_params(Mlp<double>& m, Rng& rng) {
  std::normal_distribution<double> n(0, 0.3);
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    m.bias(l) = m.bias(l).unaryExpr([&](double) { return n(rng); });
    if (m.spec().stages[l].layernorm) {
      m.gain(l) = m.gain(l).unaryExpr([&](double) { return 1.0 + n(rng); });
      m.offset(l) = m.offset(l).unaryExpr([&](double) { return n(rng); });
    }
  }
}

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n(0, 1);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("single identity layer passes its input through") {
  auto m = Mlp<double>::zeros({{2, 2}, {Stage::linear()}});
  m.weight(0).setIdentity();
  MatrixXd x(2, 1);
  x << 1, 2;
  CHECK(m.predict(x) == x);
}

TEST_CASE("layernorm maps a constant vector to zero") {
  auto m = Mlp<double>::zeros({{3, 3}, {Stage::norm()}});
  m.weight(0).setIdentity();
  const MatrixXd y = m.predict(MatrixXd::Ones(3, 1));
  CHECK(y.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("layernorm output is standardized before gain and offset") {
  Rng rng(3);
  auto m = Mlp<double>(MlpSpec{{5, 9}, {Stage::norm()}}, rng);
  const MatrixXd y = m.predict(random_matrix(5, 40, rng));
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double mean = y.col(c).mean();
    const double var = (y.col(c).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("forward matches a straight-line scalar implementation") {
  Rng rng(11);
  const MlpSpec spec{{4, 7, 5, 3}, {Stage::tanh(), Stage::tanh(), Stage::tanh()}};
  Mlp<double> m(spec, rng);
  jitter_norm_params(m, rng);
  const MatrixXd x = random_matrix(4, 6, rng);
  const MatrixXd y = m.predict(x);
  for (Eigen::Index s = 0; s < x.cols(); ++s) {
    std::vector<double> act(x.col(s).data(), x.col(s).data() + x.rows());
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& W = m.weight(l);
      std::vector<double> next(static_cast<std::size_t>(W.rows()));
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        double sum = m.bias(l)(r, 0);
        for (Eigen::Index c = 0; c < W.cols(); ++c) sum += W(r, c) * act[std::size_t(c)];
        next[std::size_t(r)] = std::tanh(sum);
      }
      act = next;
    }
    for (Eigen::Index r = 0; r < y.rows(); ++r) CHECK(y(r, s) == doctest::Approx(act[std::size_t(r)]).epsilon(1e-6));
  }
}

TEST_CASE("forward rejects a mismatched input width") {
  Rng rng(1);
  Mlp<double> m({{3, 2}, {Stage::relu()}}, rng);
  CHECK_THROWS_AS(m.predict(MatrixXd::Zero(4, 1)), ConfigError);
}

TEST_CASE("linear layer backward is the adjoint") {
  Rng rng(5);
  Mlp<double> m({{3, 2}, {Stage::linear()}}, rng);
  const MatrixXd x = random_matrix(3, 1, rng);
  const MatrixXd g = random_matrix(2, 1, rng);
  const auto t = m.forward(x);
  const auto grads = backward(t.tape, g);
  CHECK((grads.params[0] - g * x.transpose()).norm() < 1e-15);
  CHECK((grads.input - m.weight(0).transpose() * g).norm() < 1e-15);
}

TEST_CASE("zero upstream gives zero parameter gradients") {
  Rng rng(9);
  Mlp<double> m({{3, 6, 4}, {Stage::norm_tanh(), Stage::relu()}}, rng);
  const auto t = m.forward(random_matrix(3, 5, rng));
  const auto grads = backward(t.tape, MatrixXd::Zero(4, 5));
  for (const auto& g : grads.params) CHECK(g.isZero(0));
}

TEST_CASE("backward rejects an empty tape and a mismatched upstream") {
  Rng rng(9);
  Mlp<double> m({{3, 2}, {Stage::relu()}}, rng);
  CHECK_THROWS_AS(backward(Tape<double>{}, MatrixXd::Zero(2, 1)), UsageError);
  const auto t = m.forward(MatrixXd::Zero(3, 4));
  CHECK_THROWS_AS(backward(t.tape, MatrixXd::Zero(2, 3)), UsageError);
}

TEST_CASE("random networks pass the finite-difference oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_spec(rng);
    Mlp<double> m(spec, rng);
    jitter_norm_params(m, rng);
    MatrixXd x = random_matrix(spec.input_dim(), 5, rng);
    const MatrixXd target = random_matrix(spec.output_dim(), 5, rng);
    auto loss = [&] { return 0.5 * (m.predict(x) - target).squaredNorm() / 5.0; };
    const auto t = m.forward(x);
    const auto grads = backward(t.tape, MatrixXd((t.output - target) / 5.0));
    CHECK(testing::gradient_error(m.parameters(), grads.params, loss) <= 1e-4);
    CHECK(testing::gradient_error(testing::single(x), {grads.input}, loss) <= 1e-4);
  }
}

TEST_CASE("forward and backward are bit-deterministic") {
  Rng a(77), b(77);
  Mlp<double> m1({{4, 8, 2}, {Stage::norm_tanh(), Stage::linear()}}, a);
  Mlp<double> m2({{4, 8, 2}, {Stage::norm_tanh(), Stage::linear()}}, b);
  Rng r(1);
  const MatrixXd x = random_matrix(4, 3, r);
  const auto t1 = m1.forward(x), t2 = m2.forward(x);
  CHECK(t1.output == t2.output);
  const MatrixXd up = MatrixXd::Ones(2, 3);
  const auto g1 = backward(t1.tape, up), g2 = backward(t2.tape, up);
  for (std::size_t i = 0; i < g1.params.size(); ++i) CHECK(g1.params[i] == g2.params[i]);
}

TEST_CASE("initialization stays inside the fan-in bound") {
  Rng rng(4);
  Mlp<double> m({{25, 10, 3}, {Stage::relu(), Stage::norm()}}, rng);
  CHECK(m.weight(0).cwiseAbs().maxCoeff() <= 1.0 / 5.0);
  CHECK(m.weight(1).cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(10.0));
  CHECK(m.bias(0).isZero(0));
  CHECK(m.gain(1).isOnes(0));
  CHECK(m.offset(1).isZero(0));
}

TEST_CASE("rmsprop hand-evaluated step") {
  MatrixXd p = MatrixXd::Zero(1, 1);
  RmsProp<double> opt({1e-3, 0.99, 1e-8});
  opt.step({&p}, {MatrixXd::Ones(1, 1)});
  CHECK(opt.accumulators()[0](0, 0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(p(0, 0) == doctest::Approx(-0.001 / (0.1 + 1e-8)).epsilon(1e-12));
  CHECK(p(0, 0) == doctest::Approx(-0.00999999).epsilon(1e-6));
}

TEST_CASE("rmsprop with zero gradient only decays the accumulator") {
  MatrixXd p = MatrixXd::Constant(2, 2, 0.5);
  RmsProp<double> opt({1e-2, 0.99, 1e-8});
  opt.step({&p}, {MatrixXd::Constant(2, 2, 3.0)});
  const MatrixXd before = p;
  const MatrixXd v = opt.accumulators()[0];
  opt.step({&p}, {MatrixXd::Zero(2, 2)});
  CHECK(p == before);
  CHECK((opt.accumulators()[0] - 0.99 * v).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rmsprop treats identical parameters identically") {
  MatrixXd a = MatrixXd::Constant(1, 3, 0.2), b = a;
  const MatrixXd g = (MatrixXd(1, 3) << 0.3, -1.0, 2.0).finished();
  RmsProp<double> opt;
  for (int i = 0; i < 5; ++i) opt.step({&a, &b}, {g, g});
  CHECK(a == b);
  CHECK(opt.accumulators()[0] == opt.accumulators()[1]);
}

TEST_CASE("rmsprop rejects mismatched shapes") {
  MatrixXd p = MatrixXd::Zero(2, 2);
  RmsProp<double> opt;
  CHECK_THROWS_AS(opt.step({&p}, {MatrixXd::Zero(2, 3)}), ConfigError);
  CHECK_THROWS_AS(opt.step({&p}, {}), ConfigError);
}

TEST_CASE("clip_params clamps, leaves inside entries alone, and is idempotent") {
  MatrixXd p(1, 3);
  p << 0.5, -0.02, 0.005;
  clip_params<double>({&p}, 0.01);
  CHECK(p(0, 0) == 0.01);
  CHECK(p(0, 1) == -0.01);
  CHECK(p(0, 2) == 0.005);
  const MatrixXd once = p;
  clip_params<double>({&p}, 0.01);
  CHECK(p == once);
  MatrixXd inside = MatrixXd::Constant(2, 2, 0.003);
  clip_params<double>({&inside}, 0.01);
  CHECK(inside == MatrixXd::Constant(2, 2, 0.003));
  CHECK(max_abs<double>({&p}) == 0.01);
  CHECK_THROWS_AS(clip_params<double>({&p}, 0.0), ConfigError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(8);
  Checkpoint ck;
  const MatrixXd a = random_matrix(3, 4, rng);
  ck.put("a", a);
  ck.put("scalar", MatrixXd::Constant(1, 1, -0.0));
  ck.put("half", a, DType::f32);
  const auto back = Checkpoint::deserialize(ck.serialize());
  CHECK(back == ck);
  CHECK(back.get("a") == a);
  CHECK(std::signbit(back.get("scalar")(0, 0)));
  CHECK(back.get("half") == a.cast<float>().cast<double>());
  CHECK(back.entry("half").dtype == DType::f32);
  CHECK(back.serialize() == ck.serialize());
}

TEST_CASE("checkpoint header layout") {
  Checkpoint ck;
  ck.put("w", MatrixXd::Constant(1, 2, 1.5));
  const auto bytes = ck.serialize();
  CHECK(bytes.substr(0, 8) == "ITICKPT1");
  // magic + count + (len + "w" + dtype + rank + 2 dims) + 2 f64 values
  CHECK(bytes.size() == 8 + 8 + (4 + 1 + 1 + 4 + 16) + 16);
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
}

TEST_CASE("checkpoint rejects corrupt input and missing names") {
  Checkpoint ck;
  ck.put("w", MatrixXd::Ones(2, 2));
  auto bytes = ck.serialize();
  CHECK_THROWS_AS(Checkpoint::deserialize(bytes.substr(0, bytes.size() - 1)), ConfigError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(Checkpoint::deserialize(bytes), ConfigError);
  CHECK_THROWS_AS(ck.get("missing"), ConfigError);
  ck.put("w", MatrixXd::Zero(1, 1));
  CHECK(ck.entries().size() == 1);
  CHECK(ck.get("w") == MatrixXd::Zero(1, 1));
}

TEST_CASE("networks round trip through a checkpoint file") {
  Rng rng(12);
  Mlp<double> m({{5, 6, 2}, {Stage::norm_tanh(), Stage::tanh()}}, rng);
  jitter_norm_params(m, rng);
  Checkpoint ck;
  put_mlp(ck, "net", m);
  const auto path = std::filesystem::temp_directory_path() / "iti_nncore_roundtrip.ckpt";
  ck.save(path);
  const auto loaded = get_mlp<double>(Checkpoint::load(path), "net");
  std::filesystem::remove(path);
  CHECK(loaded.spec() == m.spec());
  for (std::size_t i = 0; i < m.tensors().size(); ++i) CHECK(loaded.tensors()[i] == m.tensors()[i]);
  const MatrixXd x = random_matrix(5, 3, rng);
  CHECK(loaded.predict(x) == m.predict(x));
}

TEST_CASE("parameter hash tracks contents and shapes") {
  MatrixXd a = MatrixXd::Zero(2, 3), b = MatrixXd::Zero(3, 2);
  const auto ha = parameter_hash<double>({&a});
  CHECK(ha != parameter_hash<double>({&b}));
  a(1, 1) = 1e-300;
  CHECK(ha != parameter_hash<double>({&a}));
}

TEST_CASE("float networks cast from double agree to single precision") {
  Rng rng(6);
  Mlp<double> m({{3, 4, 2}, {Stage::norm_tanh(), Stage::linear()}}, rng);
  const auto f = m.cast<float>();
  const MatrixXd x = random_matrix(3, 2, rng);
  const MatrixXd diff = m.predict(x) - f.predict(x.cast<float>()).cast<double>();
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-5);
}
