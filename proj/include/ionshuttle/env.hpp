#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "ionshuttle/chip.hpp"
#include "ionshuttle/circuit.hpp"
#include "ionshuttle/repr.hpp"

namespace ionshuttle {

struct RewardConfig {
  double beta = -std::log(0.9995);  // discount rate, gamma = exp(-beta)
  double penalty_rate = 0.1;
  double gamma_s = 1.0;
  bool shaping = true;

  double gamma() const { return std::exp(-beta); }
};

void validate(const RewardConfig& cfg);

// Integral of -c_r * exp(-beta t) over one decision epoch of length F.
double base_reward(const RewardConfig& cfg, double duration);

// -(remaining gates); zero on terminal states.
double potential(const GateDag& dag);

// gamma_s^F * phi(s') - phi(s), or 0 with shaping disabled.
double shaping_term(const RewardConfig& cfg, double duration, double potential_before,
                    double potential_after);
double shaped_reward(const RewardConfig& cfg, double reward, double duration,
                     double potential_before, double potential_after);

using StepCapFn = std::function<int(const ChipSpec&, const Problem&)>;

struct EnvConfig {
  RewardConfig reward;
  // Episodes are truncated after this many actions; step_cap_fn, when set,
  // overrides the fixed cap per problem.
  int step_cap = 512;
  StepCapFn step_cap_fn;
};

struct StepResult {
  double duration = 0.0;
  double base_reward = 0.0;
  double shaped_reward = 0.0;
  double shaping = 0.0;  // shaped_reward - base_reward
  bool done = false;
  bool truncated = false;
  int gates_executed = 0;
};

// Single SMDP instance. After every action all executable front-layer gates
// are executed until none remain executable.
class ShuttleEnv {
 public:
  ShuttleEnv(std::shared_ptr<const ChipSpec> spec, EnvConfig cfg);

  // Throws Capacity when the circuit needs more qubits than the placement holds.
  void reset(const Problem& problem);
  void reset_random(Rng& rng, int n_gates_budget);

  StepResult step(int action);

  const ChipSpec& spec() const { return *spec_; }
  const ChipState& chip_state() const { return state_; }
  const GateDag& dag() const { return dag_; }
  const EnvConfig& config() const { return cfg_; }
  double elapsed() const { return elapsed_; }
  int steps() const { return steps_; }
  int step_cap() const { return step_cap_; }
  bool done() const { return dag_.remaining() == 0; }
  int initial_gates() const { return initial_gates_; }

  void mask(std::vector<std::uint8_t>& out) const { legal_mask(*spec_, state_, out); }

 private:
  int execute_ready_gates();

  std::shared_ptr<const ChipSpec> spec_;
  EnvConfig cfg_;
  ChipState state_;
  GateDag dag_;
  double elapsed_ = 0.0;
  int steps_ = 0;
  int step_cap_ = 0;
  int initial_gates_ = 0;
};

using ProblemSource = std::function<Problem(Rng&)>;

struct EpisodeStats {
  double duration = 0.0;
  int steps = 0;
  bool solved = false;
};

// Fixed-size batch of environments with automatic reset. Observations and
// masks are stored row-major, one row per environment.
class BatchEnv {
 public:
  BatchEnv(std::shared_ptr<const ChipSpec> spec, EnvConfig env_cfg, ReprConfig repr_cfg,
           int n_envs, std::uint64_t seed, ProblemSource source);

  int size() const { return static_cast<int>(envs_.size()); }
  std::size_t obs_dim() const { return obs_dim_; }
  int num_actions() const { return spec_->num_actions(); }

  const std::vector<float>& observations() const { return obs_; }
  const std::vector<std::uint8_t>& masks() const { return masks_; }
  // Observation of the state reached by the last step, before any auto-reset.
  const std::vector<float>& final_observations() const { return final_obs_; }

  std::vector<StepResult> step(std::span<const int> actions);

  const ShuttleEnv& env(int i) const { return envs_[i]; }

  // Episodes finished (solved or truncated) since the last call.
  std::vector<EpisodeStats> drain_episodes();

 private:
  void reset_env(int i);
  void refresh_row(int i, std::vector<float>& obs_target);

  std::shared_ptr<const ChipSpec> spec_;
  ReprConfig repr_cfg_;
  ProblemSource source_;
  std::vector<ShuttleEnv> envs_;
  std::vector<Rng> rngs_;
  std::size_t obs_dim_;
  std::vector<float> obs_;
  std::vector<float> final_obs_;
  std::vector<std::uint8_t> masks_;
  std::vector<EpisodeStats> finished_;
};

}  // namespace ionshuttle
