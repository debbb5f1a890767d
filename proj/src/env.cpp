#include "ionshuttle/env.hpp"

#include <algorithm>

#include "ionshuttle/error.hpp"

namespace ionshuttle {

void validate(const RewardConfig& cfg) {
  require(cfg.beta > 0.0, ErrorKind::InvalidInput, "discount rate beta must be positive");
  require(cfg.penalty_rate > 0.0, ErrorKind::InvalidInput, "penalty rate must be positive");
  require(cfg.gamma_s > 0.0 && cfg.gamma_s <= 1.0, ErrorKind::InvalidInput,
          "gamma_s must lie in (0, 1]");
}

double base_reward(const RewardConfig& cfg, double duration) {
  // expm1 keeps the closed form accurate as beta approaches zero.
  return cfg.penalty_rate * std::expm1(-cfg.beta * duration) / cfg.beta;
}

double potential(const GateDag& dag) { return -static_cast<double>(dag.remaining()); }

double shaping_term(const RewardConfig& cfg, double duration, double potential_before,
                    double potential_after) {
  if (!cfg.shaping) return 0.0;
  return std::pow(cfg.gamma_s, duration) * potential_after - potential_before;
}

double shaped_reward(const RewardConfig& cfg, double reward, double duration,
                     double potential_before, double potential_after) {
  return reward + shaping_term(cfg, duration, potential_before, potential_after);
}

ShuttleEnv::ShuttleEnv(std::shared_ptr<const ChipSpec> spec, EnvConfig cfg)
    : spec_(std::move(spec)), cfg_(std::move(cfg)), state_(empty_state(*spec_)) {
  validate(cfg_.reward);
}

void ShuttleEnv::reset(const Problem& problem) {
  validate_state(*spec_, problem.placement);
  require(problem.circuit.num_qubits <= spec_->n_max, ErrorKind::Capacity,
          "circuit uses " + std::to_string(problem.circuit.num_qubits) +
              " qubits but the chip holds " + std::to_string(spec_->n_max));
  std::vector<std::uint8_t> present(static_cast<std::size_t>(problem.circuit.num_qubits) + 1, 0);
  for (Qubit q : problem.placement.cells) {
    if (q != kEmpty && q <= problem.circuit.num_qubits) present[q] = 1;
  }
  for (const Gate& g : problem.circuit.gates) {
    require(present[g.x] && present[g.y], ErrorKind::Capacity,
            "placement is missing a qubit used by the circuit");
  }
  state_ = problem.placement;
  dag_ = GateDag(problem.circuit);
  elapsed_ = 0.0;
  steps_ = 0;
  step_cap_ = cfg_.step_cap_fn ? cfg_.step_cap_fn(*spec_, problem) : cfg_.step_cap;
  execute_ready_gates();
  initial_gates_ = dag_.remaining();
}

void ShuttleEnv::reset_random(Rng& rng, int n_gates_budget) {
  reset(generate_random_problem(*spec_, n_gates_budget, rng));
}

int ShuttleEnv::execute_ready_gates() {
  int count = 0;
  for (;;) {
    const std::vector<int> ready = executable_gates(dag_, *spec_, state_);
    if (ready.empty()) return count;
    for (int g : ready) dag_.execute(g);
    count += static_cast<int>(ready.size());
  }
}

StepResult ShuttleEnv::step(int action) {
  require(!done(), ErrorKind::ContractViolation, "step called on a terminal state");
  const double phi_before = potential(dag_);
  StepResult r;
  r.duration = apply_action_inplace(*spec_, state_, action);
  r.gates_executed = execute_ready_gates();
  r.base_reward = base_reward(cfg_.reward, r.duration);
  r.shaping = shaping_term(cfg_.reward, r.duration, phi_before, potential(dag_));
  r.shaped_reward = r.base_reward + r.shaping;
  r.done = done();
  elapsed_ += r.duration;
  ++steps_;
  r.truncated = !r.done && steps_ >= step_cap_;
  return r;
}

BatchEnv::BatchEnv(std::shared_ptr<const ChipSpec> spec, EnvConfig env_cfg, ReprConfig repr_cfg,
                   int n_envs, std::uint64_t seed, ProblemSource source)
    : spec_(std::move(spec)), repr_cfg_(repr_cfg), source_(std::move(source)) {
  require(n_envs >= 1, ErrorKind::InvalidInput, "batch needs at least one environment");
  obs_dim_ = observation_size(*spec_, repr_cfg_);
  std::seed_seq seq{seed, static_cast<std::uint64_t>(n_envs)};
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_envs));
  seq.generate(seeds.begin(), seeds.end());
  for (int i = 0; i < n_envs; ++i) {
    envs_.emplace_back(spec_, env_cfg);
    rngs_.emplace_back(seeds[i]);
  }
  obs_.assign(obs_dim_ * n_envs, 0.0f);
  final_obs_.assign(obs_dim_ * n_envs, 0.0f);
  masks_.assign(static_cast<std::size_t>(n_envs * spec_->num_actions()), 0);
  for (int i = 0; i < n_envs; ++i) reset_env(i);
}

void BatchEnv::refresh_row(int i, std::vector<float>& obs_target) {
  std::span<float> row(obs_target.data() + obs_dim_ * i, obs_dim_);
  observe(*spec_, envs_[i].chip_state(), envs_[i].dag(), repr_cfg_, row);
}

void BatchEnv::reset_env(int i) {
  // Zero-gate problems are skipped: they are terminal before any decision.
  do {
    envs_[i].reset(source_(rngs_[i]));
  } while (envs_[i].done());
  refresh_row(i, obs_);
  std::vector<std::uint8_t> m;
  envs_[i].mask(m);
  std::copy(m.begin(), m.end(), masks_.begin() + static_cast<std::ptrdiff_t>(i) * num_actions());
}

std::vector<StepResult> BatchEnv::step(std::span<const int> actions) {
  require(actions.size() == envs_.size(), ErrorKind::InvalidInput,
          "one action per environment is required");
  std::vector<StepResult> results(envs_.size());
  std::vector<std::uint8_t> m;
  for (int i = 0; i < size(); ++i) {
    ShuttleEnv& env = envs_[i];
    results[i] = env.step(actions[i]);
    refresh_row(i, final_obs_);
    if (results[i].done || results[i].truncated) {
      finished_.push_back(EpisodeStats{env.elapsed(), env.steps(), results[i].done});
      reset_env(i);
      continue;
    }
    std::copy_n(final_obs_.begin() + static_cast<std::ptrdiff_t>(obs_dim_ * i), obs_dim_,
                obs_.begin() + static_cast<std::ptrdiff_t>(obs_dim_ * i));
    env.mask(m);
    std::copy(m.begin(), m.end(), masks_.begin() + static_cast<std::ptrdiff_t>(i) * num_actions());
  }
  return results;
}

std::vector<EpisodeStats> BatchEnv::drain_episodes() {
  std::vector<EpisodeStats> out;
  out.swap(finished_);
  return out;
}

}  // namespace ionshuttle
