#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iti/env/distortion.hpp"
#include "iti/errors.hpp"
#include "iti/env/point_mass.hpp"
#include "iti/env/rollout.hpp"

using namespace iti;
using namespace iti::env;

namespace {

const Family kFamilies[] = {Family::recolor, Family::rotation, Family::nuisance};

Domain source_domain(std::uint64_t obs_seed = 7) { return Domain{MdpSpec{}, make_observation_model(obs_seed), {}}; }

Domain target_domain(Family f, double lambda, std::uint64_t seed = 3) {
  Domain d = source_domain();
  d.distortion = sample_distortion({f, lambda, seed}, ObservationLayout{});
  return d;
}

State random_state(Rng& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return State(u(rng), u(rng), u(rng), u(rng));
}

Eigen::VectorXd nuisance_at(const ObservationModel& m, int t) {
  return m.nuisance.sample(t, 0.05, Eigen::VectorXd::Zero(m.nuisance_dims()));
}

// exp(A) by its power series, independent of Eigen's matrix functions.
Eigen::MatrixXd series_exp(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < 60; ++k) {
    term = term * a / double(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("goal at rest is a fixed point with zero reward") {
  const MdpSpec spec;
  const auto r = step_latent(State::Zero(), Action::Zero(), spec);
  CHECK(r.state == State::Zero());
  CHECK(r.reward == 0.0);
}

TEST_CASE("reward at unit distance with zero action") {
  MdpSpec spec;
  spec.action_cost = 0.37;
  const auto r = step_latent(State(1, 0, 0, 0), Action::Zero(), spec);
  CHECK(r.reward == doctest::Approx(-1.0));
}

TEST_CASE("step follows the damped integrator") {
  const MdpSpec spec;
  const State s(0.3, -0.2, 0.5, 1.0);
  const Action a(0.4, -2.0);  // second axis is clamped to -1
  const auto r = step_latent(s, a, spec);
  CHECK(r.state(0) == doctest::Approx(0.3 + 0.05 * 0.5));
  CHECK(r.state(1) == doctest::Approx(-0.2 + 0.05 * 1.0));
  CHECK(r.state(2) == doctest::Approx(0.95 * 0.5 + 0.05 * 0.4));
  CHECK(r.state(3) == doctest::Approx(0.95 * 1.0 - 0.05));
  const double d2 = r.state.head<2>().squaredNorm();
  CHECK(r.reward == doctest::Approx(-d2 - 0.01 * (0.16 + 1.0)));
}

TEST_CASE("batched steps agree with single steps") {
  const MdpSpec spec;
  Rng rng(1);
  Eigen::MatrixXd states(4, 5), actions(2, 5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < actions.size(); ++i) actions.data()[i] = u(rng);
  const Eigen::MatrixXd before = states;
  const auto rewards = step_latent_batch(states, actions, spec);
  for (Eigen::Index c = 0; c < 5; ++c) {
    const auto r = step_latent(before.col(c), actions.col(c), spec);
    CHECK((r.state - states.col(c)).norm() < 1e-14);
    CHECK(r.reward == doctest::Approx(rewards(c)).epsilon(1e-14));
  }
}

TEST_CASE("expert formula and equilibrium") {
  MdpSpec spec;
  CHECK(expert_action(State::Zero(), spec) == Action::Zero());
  spec.expert_kp = 1;
  spec.expert_kd = 1;
  CHECK(expert_action(State(1, 0, 0, 0), spec) == Action(-1, 0));
}

TEST_CASE("expert reaches the goal from a grid of starts") {
  const MdpSpec spec;
  for (double x = -1; x <= 1.0001; x += 0.25)
    for (double y = -1; y <= 1.0001; y += 0.25) {
      State s(x, y, 0, 0);
      for (int t = 0; t < spec.horizon; ++t) s = step_latent(s, expert_action(s, spec), spec).state;
      CHECK((s.head<2>() - spec.goal).norm() <= 0.05);
    }
}

TEST_CASE("expert return is at least five times better than random") {
  const auto d = source_domain();
  const auto seeds = episode_seeds(5, 100);
  const auto expert = rollout_returns(
      d, [&](const StepInputs& in) { return expert_actions(in.states, d.mdp); }, seeds);
  Rng rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto random = rollout_returns(
      d,
      [&](const StepInputs& in) {
        Eigen::MatrixXd a(2, in.states.cols());
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
        return a;
      },
      seeds);
  double me = 0, mr = 0;
  for (double r : expert) me += r / 100;
  for (double r : random) mr += r / 100;
  CHECK(me < 0);
  CHECK(mr <= 5 * me);
}

TEST_CASE("identity lift exposes the state") {
  const auto map = identity_lift(12);
  const State s(0.1, -0.2, 0.3, -0.4);
  const auto o = observe_source(s, map, Eigen::VectorXd::Zero(4));
  CHECK(o.size() == 16);
  CHECK(o.head<4>() == s);
  CHECK(o.segment(4, 8).isZero(0));
}

TEST_CASE("source map is injective and pseudo-invertible") {
  const auto model = make_observation_model(7);
  CHECK(model.obs_dim() == 16);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.map.lift);
  CHECK(svd.singularValues().minCoeff() > 0.25 * svd.singularValues().maxCoeff());
  Rng rng(2);
  const auto n = nuisance_at(model, 3);
  for (int i = 0; i < 100; ++i) {
    const State a = random_state(rng), b = random_state(rng);
    const auto oa = observe_source(a, model.map, n);
    CHECK((oa - observe_source(b, model.map, n)).norm() > 0);
    CHECK((model.map.reconstruct(oa.head(12)) - a).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("nuisance process is deterministic and state independent") {
  const auto m = make_observation_model(7);
  const Eigen::VectorXd phase = Eigen::VectorXd::Constant(4, 0.3);
  CHECK(m.nuisance.sample(17, 0.05, phase) == m.nuisance.sample(17, 0.05, phase));
  CHECK(m.nuisance.sample(17, 0.05, phase) != m.nuisance.sample(18, 0.05, phase));
  CHECK(m.nuisance.frequency.minCoeff() >= 0.5);
  CHECK(m.nuisance.frequency.maxCoeff() <= 3.0);
  const auto o1 = observe_source(State(1, 0, 0, 0), m.map, m.nuisance.sample(4, 0.05, phase));
  const auto o2 = observe_source(State(0, 1, 0, 1), m.map, m.nuisance.sample(4, 0.05, phase));
  CHECK(o1.tail(4) == o2.tail(4));
}

TEST_CASE("zero intensity is the identity for every family") {
  const auto model = make_observation_model(7);
  Rng rng(4);
  for (auto f : kFamilies) {
    const auto dist = sample_distortion({f, 0.0, 11}, ObservationLayout{});
    CHECK(dist.is_identity());
    for (int i = 0; i < 20; ++i) {
      const State s = random_state(rng);
      const auto n = nuisance_at(model, i);
      CHECK(observe_target(s, model, dist, n) == observe_source(s, model.map, n));
    }
  }
}

TEST_CASE("rotation is orthogonal and matches the power series") {
  for (double lambda : {0.25, 0.5, 1.0}) {
    const auto d = sample_distortion({Family::rotation, lambda, 5}, ObservationLayout{});
    const auto& r = d.rotation();
    CHECK((r.transpose() * r - Eigen::MatrixXd::Identity(r.rows(), r.cols())).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((d.generator() + d.generator().transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((series_exp(lambda * d.generator()) - r).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const auto full = sample_distortion({Family::rotation, 1.0, 5}, ObservationLayout{});
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(full.generator());
  CHECK(svd.singularValues()(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("recolor follows its affine formula") {
  const auto d = sample_distortion({Family::recolor, 0.6, 8}, ObservationLayout{});
  Rng rng(1);
  std::normal_distribution<double> n(0, 1);
  Eigen::VectorXd o(16);
  for (auto& v : o) v = n(rng);
  const Eigen::VectorXd expect =
      (o.array() * (1.0 + 0.6 * d.gains().array())).matrix() + 0.6 * d.shift();
  CHECK((d.apply(o) - expect).norm() < 1e-14);
  CHECK(d.gains().cwiseAbs().maxCoeff() <= 0.8);
  CHECK(d.shift().cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("nuisance family is undone by subtracting the mixed slots") {
  const auto model = make_observation_model(7);
  const auto d = sample_distortion({Family::nuisance, 1.0, 2}, ObservationLayout{});
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const State s = random_state(rng);
    const auto n = nuisance_at(model, i * 7);
    Eigen::VectorXd o = observe_target(s, model, d, n);
    CHECK(o.tail(4) == n);
    o.head(12) -= d.mixing() * o.tail(4);
    CHECK((o - observe_source(s, model.map, n)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("state is recoverable from every target observation") {
  const auto model = make_observation_model(7);
  Rng rng(10);
  for (auto f : kFamilies)
    for (double lambda : {0.0, 0.3, 0.75, 1.0}) {
      const auto d = sample_distortion({f, lambda, 21}, ObservationLayout{});
      for (int i = 0; i < 10; ++i) {
        const State s = random_state(rng);
        const auto o = observe_target(s, model, d, nuisance_at(model, i));
        CHECK((reconstruct_state(o, model, d) - s).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((d.invert(d.apply(o)) - o).cwiseAbs().maxCoeff() <= 1e-9);
      }
    }
}

TEST_CASE("distortions are seeded and grow with intensity") {
  Rng rng(12);
  std::normal_distribution<double> n(0, 1);
  for (auto f : kFamilies) {
    const auto a = sample_distortion({f, 0.7, 99}, ObservationLayout{});
    const auto b = sample_distortion({f, 0.7, 99}, ObservationLayout{});
    CHECK(a.gains() == b.gains());
    CHECK(a.shift() == b.shift());
    CHECK(a.rotation() == b.rotation());
    CHECK(a.mixing() == b.mixing());
    const auto half = sample_distortion({f, 0.5, 99}, ObservationLayout{});
    const auto full = sample_distortion({f, 1.0, 99}, ObservationLayout{});
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd o(16);
      for (auto& v : o) v = n(rng);
      const double dh = (half.apply(o) - o).norm();
      const double df = (full.apply(o) - o).norm();
      CHECK(df >= dh);
    }
  }
}

TEST_CASE("intensity outside the unit interval is rejected") {
  CHECK_THROWS_AS(sample_distortion({Family::rotation, 1.5, 0}, ObservationLayout{}), ConfigError);
  CHECK_THROWS_AS(sample_distortion({Family::recolor, -0.1, 0}, ObservationLayout{}), ConfigError);
  CHECK_THROWS_AS(parse_family("blur"), ConfigError);
  CHECK(parse_family("nuisance") == Family::nuisance);
}

TEST_CASE("episodes are reproducible and zero intensity anchors returns") {
  const auto src = source_domain();
  const auto seeds = episode_seeds(3, 6);
  // A fixed observation-feedback controller, so returns depend on the observation channel.
  Eigen::MatrixXd gain = Eigen::MatrixXd::Zero(2, src.obs_dim());
  gain(0, 0) = -0.3;
  gain(1, 1) = -0.3;
  auto ctrl = [&](const StepInputs& in) { return Eigen::MatrixXd(gain * in.observations); };
  const auto a = rollout_returns(src, ctrl, seeds);
  CHECK(a == rollout_returns(src, ctrl, seeds));
  for (auto f : kFamilies) CHECK(rollout_returns(target_domain(f, 0.0), ctrl, seeds) == a);
  CHECK(rollout_returns(target_domain(Family::recolor, 1.0), ctrl, seeds) != a);
}

TEST_CASE("dynamics are shared between domains") {
  const auto src = source_domain();
  const auto tgt = target_domain(Family::rotation, 1.0);
  const auto e1 = sample_episode_start(src, 42);
  const auto e2 = sample_episode_start(tgt, 42);
  CHECK(e1.state == e2.state);
  CHECK(e1.state.tail<2>().isZero(0));
  CHECK(e1.state.head<2>().cwiseAbs().maxCoeff() <= 1.0);
  const auto seeds = episode_seeds(1, 4);
  auto expert = [&](const StepInputs& in) { return expert_actions(in.states, src.mdp); };
  CHECK(rollout_returns(src, expert, seeds) == rollout_returns(tgt, expert, seeds));
}

TEST_CASE("trajectory dump has a versioned header and one row per transition") {
  std::vector<DumpRecord> records = {{0, 0, Eigen::Vector2d(0.5, -1.25), Eigen::Vector2d(0.1, 1)},
                                     {0, 1, Eigen::Vector2d(1e-20, 3), Eigen::Vector2d(-1, 0)}};
  std::ostringstream out;
  write_trajectory_dump(out, records);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# iti-trajectory v1");
  std::getline(in, line);
  CHECK(line == "episode\tt\to0\to1\ta0\ta1");
  std::getline(in, line);
  CHECK(line == "0\t0\t0.5\t-1.25\t0.1\t1");
  std::getline(in, line);
  CHECK(line == "0\t1\t1e-20\t3\t-1\t0");
  CHECK(!std::getline(in, line));
}
