#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ionshuttle/baselines.hpp"
#include "ionshuttle/ppo.hpp"

using namespace ionshuttle;
using testing::kind_of;

namespace {

struct Series {
  std::vector<double> r, f, v, next;
  std::vector<std::uint8_t> end;
};

Series random_series(int n, std::mt19937_64& rng, bool integer_f = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Series s;
  for (int t = 0; t < n; ++t) {
    s.r.push_back(u(rng));
    s.f.push_back(integer_f ? 1.0 : (rng() % 2 ? 1.0 : 0.25) * (1 + rng() % 3));
    s.v.push_back(u(rng));
    s.end.push_back(rng() % 7 == 0);
  }
  for (int t = 0; t < n; ++t) {
    // after an episode end the next value is either 0 (terminal) or a bootstrap
    s.next.push_back(t + 1 < n && !s.end[t] ? s.v[t + 1] : (rng() % 2 ? 0.0 : u(rng)));
  }
  return s;
}

// Direct sum: A_t = sum_k prod_{j<k} (lambda e^-beta)^F_{t+j} delta_{t+k}, stopping at an end.
std::vector<double> unrolled(const Series& s, double beta, double lambda) {
  const int n = static_cast<int>(s.r.size());
  std::vector<double> a(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double w = 1.0;
    for (int k = t; k < n; ++k) {
      const double delta = s.r[k] + std::exp(-beta * s.f[k]) * s.next[k] - s.v[k];
      a[t] += w * delta;
      if (s.end[k]) break;
      w *= std::pow(lambda * std::exp(-beta), s.f[k]);
    }
  }
  return a;
}

nn::Matrix<double> random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  nn::Matrix<double> m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

struct LossFixture {
  nn::ResidualNet<double> policy, value;
  Minibatch<double> batch;
};

LossFixture make_fixture(std::mt19937_64& rng, int b = 12) {
  const int obs = 5, n_act = 6;
  LossFixture fx{nn::ResidualNet<double>({obs, 8, 1, n_act}), nn::ResidualNet<double>({obs, 8, 1, 1}),
                 {}};
  fx.policy.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  fx.value.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  fx.batch.obs = random_matrix(obs, b, rng);
  fx.batch.masks.resize(static_cast<std::size_t>(b) * n_act);
  std::normal_distribution<double> n(0.0, 1.0);
  const nn::Matrix<double> logits = fx.policy.forward(fx.batch.obs);
  for (int i = 0; i < b; ++i) {
    std::vector<int> legal;
    for (int a = 0; a < n_act; ++a) {
      const bool ok = a == 0 || rng() % 3 != 0;
      fx.batch.masks[i * n_act + a] = ok;
      if (ok) legal.push_back(a);
    }
    fx.batch.actions.push_back(legal[rng() % legal.size()]);
    fx.batch.advantages.push_back(n(rng));
    fx.batch.returns.push_back(n(rng));
  }
  const nn::MaskedCategorical<double> d(logits, fx.batch.masks);
  for (int i = 0; i < b; ++i) {
    fx.batch.old_log_probs.push_back(d.log_probs(fx.batch.actions[i], i) + 0.3 * n(rng));
  }
  return fx;
}

}  // namespace

TEST_CASE("smdp gae with unit durations is standard gae") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Series s = random_series(30, rng, true);
    const double gamma = 0.97, lambda = 0.9, beta = -std::log(gamma);
    std::vector<double> a(30), ret(30);
    smdp_gae(s.r, s.f, s.v, s.next, s.end, beta, lambda, a, ret);
    double next_a = 0.0;
    for (int t = 29; t >= 0; --t) {
      const double delta = s.r[t] + gamma * s.next[t] - s.v[t];
      const double expect = delta + (s.end[t] ? 0.0 : gamma * lambda * next_a);
      CHECK(a[t] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(ret[t] == doctest::Approx(a[t] + s.v[t]).epsilon(1e-12));
      next_a = expect;
    }
  }
}

TEST_CASE("smdp gae matches the unrolled sum") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    const Series s = random_series(n, rng);
    const double beta = 0.01 + 0.2 * (rng() % 100) / 100.0;
    const double lambda = (rng() % 100) / 100.0;
    std::vector<double> a(n), ret(n);
    smdp_gae(s.r, s.f, s.v, s.next, s.end, beta, lambda, a, ret);
    const auto oracle = unrolled(s, beta, lambda);
    for (int t = 0; t < n; ++t) CHECK(std::abs(a[t] - oracle[t]) < 1e-10);
  }
}

TEST_CASE("lambda one gives discounted Monte Carlo returns") {
  std::mt19937_64 rng(3);
  Series s = random_series(25, rng);
  std::fill(s.end.begin(), s.end.end(), 0);
  s.end.back() = 1;
  for (int t = 0; t + 1 < 25; ++t) s.next[t] = s.v[t + 1];
  s.next.back() = 0.0;
  const double beta = 0.05;
  std::vector<double> a(25), ret(25);
  smdp_gae(s.r, s.f, s.v, s.next, s.end, beta, 1.0, a, ret);
  for (int t = 0; t < 25; ++t) {
    double g = 0.0, disc = 1.0;
    for (int k = t; k < 25; ++k) {
      g += disc * s.r[k];
      disc *= std::exp(-beta * s.f[k]);
    }
    CHECK(ret[t] == doctest::Approx(g).epsilon(1e-10));
  }
}

TEST_CASE("gae convenience form and input checks") {
  const std::vector<double> r = {1.0, 2.0}, f = {1.0, 2.0}, v = {0.5, 0.25, 3.0};
  const std::vector<std::uint8_t> done = {0, 0};
  std::vector<double> a(2), ret(2), a2(2), ret2(2);
  smdp_gae(r, f, v, done, 0.1, 0.9, a, ret);
  const std::vector<double> vv = {0.5, 0.25}, next = {0.25, 3.0};
  const std::vector<std::uint8_t> end = {0, 1};
  smdp_gae(r, f, vv, next, end, 0.1, 0.9, a2, ret2);
  CHECK(a == a2);
  // single-step example: delta = R + e^{-beta F} V' - V
  CHECK(a[1] == doctest::Approx(2.0 + std::exp(-0.2) * 3.0 - 0.25));

  const std::vector<double> bad = {0.5, 0.25};
  CHECK(kind_of([&] { smdp_gae(r, f, bad, done, 0.1, 0.9, a, ret); }) == ErrorKind::InvalidInput);
  const std::vector<double> nan_r = {std::nan(""), 1.0};
  CHECK(kind_of([&] { smdp_gae(nan_r, f, v, done, 0.1, 0.9, a, ret); }) == ErrorKind::Numeric);
}

TEST_CASE("ppo loss value matches a scalar oracle") {
  std::mt19937_64 rng(4);
  for (bool norm : {false, true}) {
    LossFixture fx = make_fixture(rng);
    LossConfig cfg{0.2, 0.5, 0.01, norm};
    const LossReport rep = ppo_loss<double>(fx.policy, fx.value, fx.batch, cfg);
    const auto logits = fx.policy.forward(fx.batch.obs);
    const auto values = fx.value.forward(fx.batch.obs);
    const int b = fx.batch.size(), n_act = static_cast<int>(logits.rows());
    std::vector<double> adv = fx.batch.advantages;
    if (norm) {
      double m = 0.0, s = 0.0;
      for (double x : adv) m += x / b;
      for (double x : adv) s += (x - m) * (x - m) / (b - 1);
      for (double& x : adv) x = (x - m) / (std::sqrt(s) + 1e-8);
    }
    double surr = 0.0, vl = 0.0, ent = 0.0;
    for (int i = 0; i < b; ++i) {
      double z = 0.0;
      for (int a = 0; a < n_act; ++a)
        if (fx.batch.masks[i * n_act + a]) z += std::exp(logits(a, i));
      double h = 0.0;
      for (int a = 0; a < n_act; ++a) {
        if (!fx.batch.masks[i * n_act + a]) continue;
        const double p = std::exp(logits(a, i)) / z;
        h -= p * std::log(p);
      }
      const double logp = logits(fx.batch.actions[i], i) - std::log(z);
      const double ratio = std::exp(logp - fx.batch.old_log_probs[i]);
      const double clipped = std::min(std::max(ratio, 0.8), 1.2);
      surr += std::min(ratio * adv[i], clipped * adv[i]) / b;
      vl += std::pow(values(0, i) - fx.batch.returns[i], 2) / b;
      ent += h / b;
    }
    CHECK(rep.policy_loss == doctest::Approx(-surr).epsilon(1e-12));
    CHECK(rep.value_loss == doctest::Approx(vl).epsilon(1e-12));
    CHECK(rep.entropy == doctest::Approx(ent).epsilon(1e-12));
    CHECK(rep.loss == doctest::Approx(-surr + 0.5 * vl - 0.01 * ent).epsilon(1e-12));
  }
}

TEST_CASE("ppo loss gradient matches finite differences") {
  std::mt19937_64 rng(5);
  LossFixture fx = make_fixture(rng);
  LossConfig cfg{0.2, 0.5, 0.05, true};
  std::vector<double> gp(fx.policy.size(), 0.0), gv(fx.value.size(), 0.0);
  ppo_loss<double>(fx.policy, fx.value, fx.batch, cfg, gp, gv);
  auto loss = [&] { return ppo_loss<double>(fx.policy, fx.value, fx.batch, cfg).loss; };
  const double h = 1e-6;
  auto check_net = [&](nn::ResidualNet<double>& net, const std::vector<double>& g) {
    double worst = 0.0;
    for (std::size_t i = 0; i < net.size(); ++i) {
      const double keep = net.params()[i];
      net.params()[i] = keep + h;
      const double up = loss();
      net.params()[i] = keep - h;
      const double down = loss();
      net.params()[i] = keep;
      worst = std::max(worst, std::abs((up - down) / (2 * h) - g[i]));
    }
    return worst;
  };
  CHECK(check_net(fx.policy, gp) < 1e-6);
  CHECK(check_net(fx.value, gv) < 1e-6);
}

TEST_CASE("clipped samples carry no surrogate gradient") {
  std::mt19937_64 rng(6);
  LossFixture fx = make_fixture(rng);
  // ratio far above 1 + eps with positive advantages: the clipped branch wins.
  for (double& lp : fx.batch.old_log_probs) lp -= 5.0;
  for (double& a : fx.batch.advantages) a = std::abs(a) + 0.1;
  LossConfig cfg{0.1, 0.5, 0.0, false};
  std::vector<double> gp(fx.policy.size(), 0.0), gv(fx.value.size(), 0.0);
  const LossReport rep = ppo_loss<double>(fx.policy, fx.value, fx.batch, cfg, gp, gv);
  CHECK(rep.clip_fraction == 1.0);
  for (double g : gp) CHECK(g == 0.0);
  double sum_a = 0.0;
  for (double a : fx.batch.advantages) sum_a += a;
  CHECK(rep.policy_loss == doctest::Approx(-1.1 * sum_a / fx.batch.size()));
}

TEST_CASE("normalized loss ignores advantage affine maps") {
  std::mt19937_64 rng(7);
  LossFixture fx = make_fixture(rng);
  LossConfig cfg{0.1, 0.5, 0.01, true};
  const double base = ppo_loss<double>(fx.policy, fx.value, fx.batch, cfg).loss;
  for (double& a : fx.batch.advantages) a = 3.0 * a - 7.0;
  CHECK(ppo_loss<double>(fx.policy, fx.value, fx.batch, cfg).loss == doctest::Approx(base).epsilon(1e-7));
  CHECK(fx.batch.size() > 0);
  Minibatch<double> empty;
  empty.obs = nn::Matrix<double>(5, 0);
  CHECK(kind_of([&] { ppo_loss<double>(fx.policy, fx.value, empty, cfg); }) == ErrorKind::InvalidInput);
}

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.learning_steps = 100;
  CHECK(scheduled_learning_rate(cfg, 0) == 1e-3);
  CHECK(scheduled_learning_rate(cfg, 50) == doctest::Approx(5e-4));
  CHECK(scheduled_learning_rate(cfg, 100) == 0.0);
  cfg.linear_lr_decay = false;
  CHECK(scheduled_learning_rate(cfg, 100) == 1e-3);
}

TEST_CASE("config derived quantities and validation") {
  TrainConfig cfg;
  CHECK(cfg.reward().beta == doctest::Approx(-std::log(0.9995)));
  CHECK(cfg.reward().gamma_s == 1.0);
  cfg.gamma_s_equals_gamma = true;
  CHECK(cfg.reward().gamma_s == doctest::Approx(0.9995));
  TrainConfig bad;
  bad.gamma = 1.0;
  CHECK(kind_of([&] { validate(bad); }) == ErrorKind::InvalidInput);
  bad = {};
  bad.minibatch_size = 0;
  CHECK(kind_of([&] { validate(bad); }) == ErrorKind::InvalidInput);
  bad = {};
  bad.learning_steps = -1;
  CHECK(kind_of([&] { validate(bad); }) == ErrorKind::InvalidInput);
}

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.n_envs = 2;
  cfg.n_steps = 8;
  cfg.minibatch_size = 8;
  cfg.epochs = 2;
  cfg.n_hidden = 8;
  cfg.n_blocks = 1;
  cfg.n_gates = 4;
  cfg.gamma = 0.99;
  cfg.learning_steps = 6;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("training: zero steps, determinism, metrics") {
  const ChipSpec x = build_x_chip(2);
  TrainConfig cfg = tiny_config();
  cfg.learning_steps = 0;
  const Agent init = make_agent(x, "x2", cfg);
  const Agent zero = train(x, "x2", cfg);
  CHECK(std::equal(init.policy.params().begin(), init.policy.params().end(),
                   zero.policy.params().begin()));
  CHECK(zero.learning_steps_done == 0);

  cfg = tiny_config();
  std::vector<TrainMetrics> seen;
  TrainHooks hooks;
  hooks.on_metrics = [&](const TrainMetrics& m) { seen.push_back(m); };
  const Agent a = train(x, "x2", cfg, hooks);
  const Agent b = train(x, "x2", cfg);
  CHECK(a.learning_steps_done == 6);
  CHECK(std::equal(a.policy.params().begin(), a.policy.params().end(), b.policy.params().begin()));
  CHECK(std::equal(a.value.params().begin(), a.value.params().end(), b.value.params().begin()));
  CHECK_FALSE(std::equal(a.policy.params().begin(), a.policy.params().end(),
                         init.policy.params().begin()));
  REQUIRE_FALSE(seen.empty());
  CHECK(seen.back().learning_steps == 6);
  for (const auto& m : seen) CHECK(m.learning_rate > 0.0);

  cfg.seed = 12;
  const Agent c = train(x, "x2", cfg);
  CHECK_FALSE(std::equal(a.policy.params().begin(), a.policy.params().end(),
                         c.policy.params().begin()));
}

TEST_CASE("training step cap") {
  const ChipSpec x = build_x_chip(3);
  std::mt19937_64 rng(9);
  const Problem p = generate_random_problem(x, 10, rng);
  TrainConfig cfg;
  cfg.truncation_floor = 5;
  cfg.truncation_multiplier = 4.0;
  const int h = heuristic_compile(x, p).steps();
  CHECK(training_step_cap(x, p, cfg) == std::max(5, 4 * h));
  cfg.truncation_multiplier = 0.0;
  CHECK(training_step_cap(x, p, cfg) == 5);
}
