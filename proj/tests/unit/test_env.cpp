#include <cmath>
#include <memory>
#include <random>

#include "helpers.hpp"
#include "ionshuttle/env.hpp"

using namespace ionshuttle;
using testing::E;
using testing::kind_of;
using testing::state_of;
using testing::x_action;

namespace {

// Composite Simpson rule for the integral of -c e^{-beta t} over [0, F].
double quadrature(double beta, double c, double f) {
  const int n = 2000;
  const double h = f / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * -c * std::exp(-beta * i * h);
  }
  return sum * h / 3.0;
}

Problem fig2_problem() {
  Problem p;
  p.circuit.gates = {{1, 3}, {2, 4}, {1, 5}, {1, 3}};
  p.circuit.num_qubits = 5;
  p.placement = state_of({4, 1, E, 3, 5, E, E, 2, E, E, E});
  return p;
}

}  // namespace

TEST_CASE("base reward closed form") {
  RewardConfig cfg;
  cfg.beta = -std::log(0.9995);
  cfg.penalty_rate = 0.1;
  CHECK(std::abs(base_reward(cfg, 1.0) - quadrature(cfg.beta, 0.1, 1.0)) < 1e-9);
  CHECK(std::abs(base_reward(cfg, 0.25) - quadrature(cfg.beta, 0.1, 0.25)) < 1e-9);
  CHECK(base_reward(cfg, 1.0) < 0.0);
  cfg.beta = 1e-8;
  CHECK(std::abs(base_reward(cfg, 3.0) - (-0.1 * 3.0)) < 1e-6);
}

TEST_CASE("potential and shaping") {
  Circuit c;
  c.gates = {{1, 2}, {2, 3}, {3, 4}, {1, 4}};
  c.num_qubits = 4;
  GateDag dag(c);
  CHECK(potential(dag) == -4.0);
  dag.execute(0);
  CHECK(potential(dag) == -3.0);
  dag.execute(1);
  dag.execute(2);
  dag.execute(3);
  CHECK(potential(dag) == 0.0);

  RewardConfig cfg;
  const double r = -0.05;
  CHECK(shaped_reward(cfg, r, 1.0, -4.0, -3.0) == r + 1.0);
  CHECK(shaped_reward(cfg, r, 1.0, -4.0, -4.0) == r);
  cfg.gamma_s = 0.99;
  CHECK(shaped_reward(cfg, r, 2.0, -5.0, -4.0) ==
        doctest::Approx(r + 0.99 * 0.99 * -4.0 + 5.0).epsilon(1e-15));
  cfg.shaping = false;
  CHECK(shaped_reward(cfg, r, 2.0, -5.0, -4.0) == r);
}

TEST_CASE("reward config validation") {
  RewardConfig cfg;
  cfg.beta = 0.0;
  CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::InvalidInput);
  cfg = {};
  cfg.penalty_rate = 0.0;
  CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::InvalidInput);
  cfg = {};
  cfg.gamma_s = 1.5;
  CHECK(kind_of([&] { validate(cfg); }) == ErrorKind::InvalidInput);
}

TEST_CASE("step semantics") {
  const auto x = std::make_shared<const ChipSpec>(build_x_chip(4));
  ShuttleEnv env(x, EnvConfig{});
  env.reset(fig2_problem());
  CHECK(env.initial_gates() == 4);
  // Compute already holds 4 and 1: nothing may enter.
  CHECK(kind_of([&] { env.step(x_action(*x, "StorageB->Compute")); }) == ErrorKind::MaskedAction);
  std::vector<std::uint8_t> mask;
  env.mask(mask);
  CHECK(mask[x_action(*x, "StorageB->Compute")] == 0);
  CHECK(mask[x_action(*x, "Compute->Spam")] == 1);

  StepResult r = env.step(x_action(*x, "Compute->Spam"));  // 4 out
  CHECK(r.gates_executed == 0);
  r = env.step(x_action(*x, "StorageA->Compute"));  // 3 in, gate (1,3) runs
  CHECK(r.gates_executed >= 1);
  CHECK(r.shaping == 1.0);
  CHECK(env.dag().remaining() == 3);
  CHECK(env.elapsed() == 2.0);
  CHECK(env.steps() == 2);
}

TEST_CASE("terminal and capacity errors") {
  const auto x = std::make_shared<const ChipSpec>(build_x_chip(2));
  ShuttleEnv env(x, EnvConfig{});
  Problem p;
  p.circuit.gates = {{1, 2}};
  p.circuit.num_qubits = 2;
  p.placement = state_of({1, 2, E, E, E, E, E});
  env.reset(p);  // gate runs during reset
  CHECK(env.done());
  CHECK(kind_of([&] { env.step(0); }) == ErrorKind::ContractViolation);

  Problem big;
  big.circuit.gates = {{1, 5}};
  big.circuit.num_qubits = 5;
  big.placement = state_of({E, E, E, 1, 2, 3, 4});
  CHECK(kind_of([&] { env.reset(big); }) == ErrorKind::Capacity);
}

TEST_CASE("random episodes: telescoping, monotone progress, policy invariance") {
  std::mt19937_64 rng(17);
  for (double gs : {1.0, 0.0}) {
    const auto x = std::make_shared<const ChipSpec>(build_x_chip(3));
    EnvConfig cfg;
    cfg.step_cap = 1 << 20;
    if (gs == 0.0) cfg.reward.gamma_s = cfg.reward.gamma();
    ShuttleEnv env(x, cfg);
    for (int ep = 0; ep < 100; ++ep) {
      env.reset(generate_random_problem(*x, 12, rng));
      const int initial = env.dag().remaining();
      double shaping_sum = 0.0, diff_sum = 0.0;
      double base_ret = 0.0, shaped_ret = 0.0, discount = 1.0;
      while (!env.done()) {
        std::vector<std::uint8_t> mask;
        env.mask(mask);
        std::vector<int> legal;
        for (int a = 0; a < static_cast<int>(mask.size()); ++a) {
          if (mask[a]) legal.push_back(a);
        }
        const int before = env.dag().remaining();
        const StepResult r = env.step(legal[rng() % legal.size()]);
        CHECK(env.dag().remaining() <= before);
        CHECK(r.duration > 0.0);
        shaping_sum += r.shaping;
        diff_sum += r.shaped_reward - r.base_reward;
        base_ret += discount * r.base_reward;
        shaped_ret += discount * r.shaped_reward;
        discount *= std::exp(-cfg.reward.beta * r.duration);
      }
      if (gs == 1.0) {
        CHECK(shaping_sum == static_cast<double>(initial));
        CHECK(std::abs(diff_sum - initial) < 1e-9);
      } else {
        // With gamma_s = gamma the shaped return differs by -phi(s0).
        CHECK(std::abs(shaped_ret - base_ret - initial) < 1e-9);
      }
    }
  }
}

TEST_CASE("batch env determinism and auto reset") {
  const auto x = std::make_shared<const ChipSpec>(build_x_chip(3));
  ReprConfig repr;
  repr.n_gates_budget = 10;
  auto source = [x](Rng& rng) { return generate_random_problem(*x, 10, rng); };
  BatchEnv a(x, EnvConfig{}, repr, 8, 5, source);
  BatchEnv b(x, EnvConfig{}, repr, 8, 5, source);
  std::mt19937_64 rng(1);
  bool saw_done = false;
  for (int t = 0; t < 400; ++t) {
    REQUIRE(a.observations() == b.observations());
    REQUIRE(a.masks() == b.masks());
    std::vector<int> actions(8);
    for (int i = 0; i < 8; ++i) {
      std::vector<int> legal;
      for (int k = 0; k < a.num_actions(); ++k) {
        if (a.masks()[i * a.num_actions() + k]) legal.push_back(k);
      }
      actions[i] = legal[rng() % legal.size()];
    }
    const auto ra = a.step(actions);
    const auto rb = b.step(actions);
    for (int i = 0; i < 8; ++i) {
      CHECK(ra[i].shaped_reward == rb[i].shaped_reward);
      CHECK(ra[i].done == rb[i].done);
      if (ra[i].done) {
        saw_done = true;
        CHECK_FALSE(a.env(i).done());  // already reset
        CHECK(a.env(i).steps() == 0);
      }
    }
  }
  CHECK(saw_done);
  CHECK_FALSE(a.drain_episodes().empty());

  // batch of one equals a single env fed the same problem stream
  BatchEnv one(x, EnvConfig{}, repr, 1, 9, source);
  const ShuttleEnv& inner = one.env(0);
  ShuttleEnv single(x, EnvConfig{});
  Problem p;
  p.circuit.num_qubits = 0;
  single.reset(Problem{Circuit{}, empty_state(*x)});
  // mirror the current problem by replaying its state
  const ChipState start = inner.chip_state();
  const int a0 = [&] {
    for (int k = 0; k < one.num_actions(); ++k) {
      if (one.masks()[k]) return k;
    }
    return -1;
  }();
  const ChipState expect = apply_action(*x, start, a0).state;
  one.step(std::vector<int>{a0});
  if (!one.env(0).done() && one.env(0).steps() == 1) CHECK(one.env(0).chip_state() == expect);
}

TEST_CASE("truncation at the step cap") {
  const auto x = std::make_shared<const ChipSpec>(build_x_chip(3));
  EnvConfig cfg;
  cfg.step_cap = 3;
  ShuttleEnv env(x, cfg);
  Problem p;
  p.circuit.gates = {{1, 2}};
  p.circuit.num_qubits = 2;
  p.placement = state_of({E, E, E, 1, E, E, 2, E, E});
  env.reset(p);
  const int a_to_b = x_action(*x, "StorageA->StorageB");
  const int b_to_a = x_action(*x, "StorageB->StorageA");
  CHECK_FALSE(env.step(a_to_b).truncated);
  CHECK_FALSE(env.step(b_to_a).truncated);
  const StepResult r = env.step(a_to_b);
  CHECK(r.truncated);
  CHECK_FALSE(r.done);
}
