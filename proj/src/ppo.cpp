#include "ionshuttle/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ionshuttle/baselines.hpp"
#include "ionshuttle/error.hpp"

namespace ionshuttle {

RewardConfig TrainConfig::reward() const {
  RewardConfig r;
  r.beta = -std::log(gamma);
  r.penalty_rate = penalty_rate;
  r.gamma_s = gamma_s_equals_gamma ? gamma : gamma_s;
  r.shaping = shaping;
  return r;
}

ReprConfig TrainConfig::repr() const {
  ReprConfig r;
  r.representation = representation;
  r.encoding = encoding;
  r.k_lookahead = k_lookahead;
  r.b_cell = b_cell;
  r.b_total = b_total_gates;
  r.n_gates_budget = n_gates;
  return r;
}

void validate(const TrainConfig& cfg) {
  auto check = [](bool ok, const char* what) { require(ok, ErrorKind::InvalidInput, what); };
  check(cfg.learning_rate > 0.0, "learning_rate must be positive");
  check(cfg.clip_ratio > 0.0 && cfg.clip_ratio < 1.0, "clip ratio must lie in (0, 1)");
  check(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0, "gae lambda must lie in [0, 1]");
  check(cfg.gamma > 0.0 && cfg.gamma < 1.0, "gamma must lie in (0, 1)");
  check(cfg.n_envs >= 1 && cfg.n_steps >= 1, "n_envs and n_steps must be positive");
  check(cfg.epochs >= 1 && cfg.minibatch_size >= 1, "epochs and minibatch size must be positive");
  check(cfg.n_gates >= 1, "n_gates must be positive");
  check(cfg.n_hidden >= 1 && cfg.n_blocks >= 0, "invalid network size");
  check(cfg.k_lookahead >= 1 && cfg.b_cell >= 1 && cfg.b_total_gates >= 1,
        "representation parameters must be positive");
  check(cfg.learning_steps >= 0, "learning_steps must be non-negative");
  check(cfg.max_grad_norm > 0.0, "max_grad_norm must be positive");
  validate(cfg.reward());
}

void smdp_gae(std::span<const double> rewards, std::span<const double> durations,
              std::span<const double> values, std::span<const double> next_values,
              std::span<const std::uint8_t> episode_end, double beta, double lambda,
              std::span<double> advantages, std::span<double> returns) {
  const std::size_t n = rewards.size();
  require(durations.size() == n && values.size() == n && next_values.size() == n &&
              episode_end.size() == n && advantages.size() == n && returns.size() == n,
          ErrorKind::InvalidInput, "gae inputs are not aligned");
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    require(std::isfinite(rewards[i]) && std::isfinite(durations[i]) && std::isfinite(values[i]) &&
                std::isfinite(next_values[i]),
            ErrorKind::Numeric, "non-finite gae input at step " + std::to_string(i));
    const double f = durations[i];
    const double delta = rewards[i] + std::exp(-beta * f) * next_values[i] - values[i];
    const double carry = episode_end[i] ? 0.0 : std::pow(lambda * std::exp(-beta), f) * next_adv;
    advantages[i] = delta + carry;
    returns[i] = advantages[i] + values[i];
    next_adv = advantages[i];
  }
}

void smdp_gae(std::span<const double> rewards, std::span<const double> durations,
              std::span<const double> values, std::span<const std::uint8_t> dones, double beta,
              double lambda, std::span<double> advantages, std::span<double> returns) {
  const std::size_t n = rewards.size();
  require(values.size() == n + 1, ErrorKind::InvalidInput, "values needs a bootstrap entry");
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = dones[i] ? 0.0 : values[i + 1];
  smdp_gae(rewards, durations, values.first(n), next, dones, beta, lambda, advantages, returns);
}

template <typename Scalar>
LossReport ppo_loss(const nn::ResidualNet<Scalar>& policy, const nn::ResidualNet<Scalar>& value,
                    const Minibatch<Scalar>& batch, const LossConfig& cfg,
                    std::span<Scalar> policy_grad, std::span<Scalar> value_grad) {
  const int b = batch.size();
  require(b > 0, ErrorKind::InvalidInput, "empty minibatch");
  typename nn::ResidualNet<Scalar>::Cache pcache;
  typename nn::ResidualNet<Scalar>::Cache vcache;
  const bool want_grad = !policy_grad.empty() || !value_grad.empty();
  const nn::Matrix<Scalar> logits = policy.forward(batch.obs, want_grad ? &pcache : nullptr);
  const nn::Matrix<Scalar> values = value.forward(batch.obs, want_grad ? &vcache : nullptr);
  const nn::MaskedCategorical<Scalar> dist(logits, batch.masks);

  std::vector<double> adv = batch.advantages;
  if (cfg.normalize_advantages && b > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / b;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double stddev = std::sqrt(var / (b - 1));
    for (double& a : adv) a = (a - mean) / (stddev + 1e-8);
  }

  LossReport rep;
  nn::Matrix<Scalar> d_logits = nn::Matrix<Scalar>::Zero(logits.rows(), b);
  nn::Matrix<Scalar> d_values(1, b);
  const double inv_b = 1.0 / b;
  for (int i = 0; i < b; ++i) {
    const int a = batch.actions[i];
    const double logp = static_cast<double>(dist.log_probs(a, i));
    const double log_ratio = logp - batch.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double unclipped = ratio * adv[i];
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * adv[i];
    rep.policy_loss -= std::min(unclipped, clipped) * inv_b;
    const double d_surr_d_logp = unclipped <= clipped ? unclipped : 0.0;
    rep.clip_fraction += (std::abs(ratio - 1.0) > cfg.clip_ratio ? 1.0 : 0.0) * inv_b;
    rep.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;

    const double h = static_cast<double>(dist.entropy(i));
    rep.entropy += h * inv_b;

    const double diff = static_cast<double>(values(0, i)) - batch.returns[i];
    rep.value_loss += diff * diff * inv_b;

    if (!want_grad) continue;
    for (Eigen::Index j = 0; j < logits.rows(); ++j) {
      const double p = static_cast<double>(dist.probs(j, i));
      if (p <= 0.0) continue;
      const double lp = static_cast<double>(dist.log_probs(j, i));
      const double onehot = j == a ? 1.0 : 0.0;
      const double g = -d_surr_d_logp * (onehot - p) + cfg.entropy_coef * p * (lp + h);
      d_logits(j, i) = static_cast<Scalar>(g * inv_b);
    }
    d_values(0, i) = static_cast<Scalar>(cfg.value_coef * 2.0 * diff * inv_b);
  }
  rep.loss = rep.policy_loss + cfg.value_coef * rep.value_loss - cfg.entropy_coef * rep.entropy;
  if (!std::isfinite(rep.loss)) {
    fail(ErrorKind::Numeric, "non-finite loss (policy " + std::to_string(rep.policy_loss) +
                                 ", value " + std::to_string(rep.value_loss) + ", entropy " +
                                 std::to_string(rep.entropy) + ", batch " + std::to_string(b) + ")");
  }
  if (!policy_grad.empty()) policy.backward(pcache, d_logits, policy_grad);
  if (!value_grad.empty()) value.backward(vcache, d_values, value_grad);
  return rep;
}

template LossReport ppo_loss<float>(const nn::ResidualNet<float>&, const nn::ResidualNet<float>&,
                                    const Minibatch<float>&, const LossConfig&, std::span<float>,
                                    std::span<float>);
template LossReport ppo_loss<double>(const nn::ResidualNet<double>&,
                                     const nn::ResidualNet<double>&, const Minibatch<double>&,
                                     const LossConfig&, std::span<double>, std::span<double>);

Agent make_agent(const ChipSpec& spec, const std::string& chip_name, const TrainConfig& cfg) {
  validate(cfg);
  Agent agent;
  agent.config = cfg;
  agent.chip = chip_name;
  agent.n_cells = spec.n_cells;
  agent.n_actions = spec.num_actions();
  const int obs_dim = static_cast<int>(observation_size(spec, cfg.repr()));
  agent.policy = nn::ResidualNet<float>({obs_dim, cfg.n_hidden, cfg.n_blocks, spec.num_actions()});
  agent.value = nn::ResidualNet<float>({obs_dim, cfg.n_hidden, cfg.n_blocks, 1});
  std::mt19937_64 rng(cfg.seed);
  agent.policy.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  agent.value.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  return agent;
}

double scheduled_learning_rate(const TrainConfig& cfg, std::int64_t learned) {
  if (!cfg.linear_lr_decay || cfg.learning_steps == 0) return cfg.learning_rate;
  return cfg.learning_rate * (1.0 - static_cast<double>(learned) / cfg.learning_steps);
}

int training_step_cap(const ChipSpec& spec, const Problem& problem, const TrainConfig& cfg) {
  const int floor = cfg.truncation_floor;
  if (cfg.truncation_multiplier <= 0.0) return floor;
  try {
    const Schedule h = heuristic_compile(spec, problem);
    return std::max(floor, static_cast<int>(std::ceil(cfg.truncation_multiplier * h.steps())));
  } catch (const Error& e) {
    // Dense placements can be unsolvable; those episodes simply truncate.
    if (e.kind() != ErrorKind::BudgetExhausted) throw;
    return floor;
  }
}

namespace {

void clip_grad_norm(std::span<float> a, std::span<float> b, double max_norm) {
  double sq = 0.0;
  for (float g : a) sq += static_cast<double>(g) * g;
  for (float g : b) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) fail(ErrorKind::Numeric, "non-finite gradient norm");
  if (norm <= max_norm) return;
  const float scale = static_cast<float>(max_norm / (norm + 1e-6));
  for (float& g : a) g *= scale;
  for (float& g : b) g *= scale;
}

}  // namespace

Agent train(const ChipSpec& spec, const std::string& chip_name, const TrainConfig& cfg,
            const TrainHooks& hooks) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  Agent agent = make_agent(spec, chip_name, cfg);
  if (cfg.learning_steps == 0) return agent;

  auto shared_spec = std::make_shared<const ChipSpec>(spec);
  EnvConfig env_cfg;
  env_cfg.reward = cfg.reward();
  env_cfg.step_cap = cfg.truncation_floor;
  env_cfg.step_cap_fn = [cfg](const ChipSpec& s, const Problem& p) {
    return training_step_cap(s, p, cfg);
  };
  const int n_gates = cfg.n_gates;
  BatchEnv envs(shared_spec, env_cfg, cfg.repr(), cfg.n_envs, cfg.seed,
                [shared_spec, n_gates](Rng& rng) {
                  return generate_random_problem(*shared_spec, n_gates, rng);
                });

  const int n_envs = cfg.n_envs;
  const int n_steps = cfg.n_steps;
  const int n_act = spec.num_actions();
  const auto obs_dim = static_cast<Eigen::Index>(envs.obs_dim());
  const int total = n_envs * n_steps;
  const double beta = -std::log(cfg.gamma);

  nn::Matrix<float> buf_obs(obs_dim, total);
  std::vector<std::uint8_t> buf_masks(static_cast<std::size_t>(total) * n_act);
  std::vector<int> buf_actions(total);
  std::vector<double> buf_logp(total), buf_rewards(total), buf_durations(total), buf_values(total),
      buf_next(total), buf_adv(total), buf_ret(total);
  std::vector<std::uint8_t> buf_end(total);

  nn::Adam<float> opt_policy(agent.policy.size());
  nn::Adam<float> opt_value(agent.value.size());
  std::vector<float> grad_policy(agent.policy.size());
  std::vector<float> grad_value(agent.value.size());
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  const LossConfig loss_cfg{cfg.clip_ratio, cfg.value_coef, cfg.entropy_coef,
                            cfg.normalize_advantages};

  std::int64_t& learned = agent.learning_steps_done;
  std::int64_t env_steps = 0;
  std::int64_t iteration = 0;
  std::vector<int> actions(n_envs);
  std::vector<int> order(total);
  while (learned < cfg.learning_steps) {
    // Rollout.
    for (int t = 0; t < n_steps; ++t) {
      Eigen::Map<const nn::Matrix<float>> obs(envs.observations().data(), obs_dim, n_envs);
      const nn::Matrix<float> logits = agent.policy.forward(obs);
      const nn::Matrix<float> values = agent.value.forward(obs);
      const nn::MaskedCategorical<float> dist(logits, envs.masks());
      const int base = t * n_envs;
      buf_obs.middleCols(base, n_envs) = obs;
      std::copy(envs.masks().begin(), envs.masks().end(),
                buf_masks.begin() + static_cast<std::ptrdiff_t>(base) * n_act);
      for (int e = 0; e < n_envs; ++e) {
        actions[e] = dist.sample(e, rng);
        buf_actions[base + e] = actions[e];
        buf_logp[base + e] = dist.log_probs(actions[e], e);
        buf_values[base + e] = values(0, e);
      }
      const std::vector<StepResult> results = envs.step(actions);
      env_steps += n_envs;
      std::vector<int> truncated;
      for (int e = 0; e < n_envs; ++e) {
        const StepResult& r = results[e];
        buf_rewards[base + e] = cfg.shaping ? r.shaped_reward : r.base_reward;
        buf_durations[base + e] = r.duration;
        buf_end[base + e] = r.done || r.truncated;
        buf_next[base + e] = 0.0;
        if (r.truncated) truncated.push_back(e);
      }
      if (!truncated.empty()) {
        nn::Matrix<float> final_obs(obs_dim, static_cast<Eigen::Index>(truncated.size()));
        for (std::size_t k = 0; k < truncated.size(); ++k) {
          final_obs.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXf>(
              envs.final_observations().data() + obs_dim * truncated[k], obs_dim);
        }
        const nn::Matrix<float> v = agent.value.forward(final_obs);
        for (std::size_t k = 0; k < truncated.size(); ++k) {
          buf_next[base + truncated[k]] = v(0, static_cast<Eigen::Index>(k));
        }
      }
    }
    {
      Eigen::Map<const nn::Matrix<float>> obs(envs.observations().data(), obs_dim, n_envs);
      const nn::Matrix<float> last = agent.value.forward(obs);
      for (int t = 0; t < n_steps; ++t) {
        for (int e = 0; e < n_envs; ++e) {
          const int i = t * n_envs + e;
          if (buf_end[i]) continue;
          buf_next[i] = t + 1 < n_steps ? buf_values[i + n_envs] : static_cast<double>(last(0, e));
        }
      }
    }

    // Advantages, one time series per environment.
    std::vector<double> r(n_steps), f(n_steps), v(n_steps), nx(n_steps), adv(n_steps), ret(n_steps);
    std::vector<std::uint8_t> end(n_steps);
    for (int e = 0; e < n_envs; ++e) {
      for (int t = 0; t < n_steps; ++t) {
        const int i = t * n_envs + e;
        r[t] = buf_rewards[i];
        f[t] = buf_durations[i];
        v[t] = buf_values[i];
        nx[t] = buf_next[i];
        end[t] = buf_end[i];
      }
      smdp_gae(r, f, v, nx, end, beta, cfg.gae_lambda, adv, ret);
      for (int t = 0; t < n_steps; ++t) {
        buf_adv[t * n_envs + e] = adv[t];
        buf_ret[t * n_envs + e] = ret[t];
      }
    }

    // Optimization.
    TrainMetrics m;
    int updates = 0;
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs && learned < cfg.learning_steps; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int lo = 0; lo < total && learned < cfg.learning_steps; lo += cfg.minibatch_size) {
        const int bsz = std::min(cfg.minibatch_size, total - lo);
        Minibatch<float> mb;
        mb.obs.resize(obs_dim, bsz);
        mb.masks.resize(static_cast<std::size_t>(bsz) * n_act);
        for (int k = 0; k < bsz; ++k) {
          const int i = order[lo + k];
          mb.obs.col(k) = buf_obs.col(i);
          std::copy_n(buf_masks.begin() + static_cast<std::ptrdiff_t>(i) * n_act, n_act,
                      mb.masks.begin() + static_cast<std::ptrdiff_t>(k) * n_act);
          mb.actions.push_back(buf_actions[i]);
          mb.old_log_probs.push_back(buf_logp[i]);
          mb.advantages.push_back(buf_adv[i]);
          mb.returns.push_back(buf_ret[i]);
        }
        std::fill(grad_policy.begin(), grad_policy.end(), 0.0f);
        std::fill(grad_value.begin(), grad_value.end(), 0.0f);
        const LossReport rep =
            ppo_loss<float>(agent.policy, agent.value, mb, loss_cfg, grad_policy, grad_value);
        clip_grad_norm(grad_policy, grad_value, cfg.max_grad_norm);
        const double lr = scheduled_learning_rate(cfg, learned);
        opt_policy.step(agent.policy.params(), grad_policy, lr);
        opt_value.step(agent.value.params(), grad_value, lr);
        ++learned;
        ++updates;
        m.learning_rate = lr;
        m.entropy += rep.entropy;
        m.value_loss += rep.value_loss;
        m.policy_loss += rep.policy_loss;
        m.approx_kl += rep.approx_kl;
        m.clip_fraction += rep.clip_fraction;
      }
    }
    ++iteration;
    m.iteration = iteration;
    m.learning_steps = learned;
    m.env_steps = env_steps;
    if (updates > 0) {
      m.entropy /= updates;
      m.value_loss /= updates;
      m.policy_loss /= updates;
      m.approx_kl /= updates;
      m.clip_fraction /= updates;
    }
    const std::vector<EpisodeStats> episodes = envs.drain_episodes();
    m.episodes = static_cast<int>(episodes.size());
    int solved = 0;
    for (const EpisodeStats& ep : episodes) {
      m.mean_episode_duration += ep.duration;
      solved += ep.solved;
    }
    if (!episodes.empty()) {
      m.mean_episode_duration /= static_cast<double>(episodes.size());
      m.solve_rate = static_cast<double>(solved) / static_cast<double>(episodes.size());
    }
    m.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (hooks.on_metrics) hooks.on_metrics(m);
    if (hooks.on_checkpoint && hooks.checkpoint_every > 0 &&
        iteration % hooks.checkpoint_every == 0) {
      hooks.on_checkpoint(agent);
    }
    if (cfg.time_limit_seconds > 0.0 && m.elapsed_seconds >= cfg.time_limit_seconds) break;
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(agent);
  return agent;
}

}  // namespace ionshuttle
