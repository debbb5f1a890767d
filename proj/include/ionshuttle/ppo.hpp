#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ionshuttle/chip.hpp"
#include "ionshuttle/env.hpp"
#include "ionshuttle/nn.hpp"
#include "ionshuttle/repr.hpp"

namespace ionshuttle {

// Defaults are the 50-ion hyperparameters.
struct TrainConfig {
  double learning_rate = 2.5e-4;
  bool linear_lr_decay = true;
  double value_coef = 0.5;
  double clip_ratio = 0.1;
  int n_envs = 250;
  int n_steps = 40;
  double entropy_coef = 1.0e-4;
  int epochs = 4;
  int minibatch_size = 1024;
  double gae_lambda = 0.96;
  double gamma = 0.9995;
  double gamma_s = 1.0;
  bool gamma_s_equals_gamma = false;
  bool shaping = true;
  double penalty_rate = 0.1;
  int n_gates = 1275;
  int n_blocks = 3;
  int n_hidden = 512;
  std::int64_t learning_steps = 1'000'000;  // minibatch gradient updates
  int k_lookahead = 4;
  int b_cell = 6;
  int b_total_gates = 7;
  NumericEncoding encoding = NumericEncoding::Sinusoidal;
  Representation representation = Representation::Proposed;
  bool normalize_advantages = true;
  double max_grad_norm = 0.5;
  int truncation_floor = 512;
  double truncation_multiplier = 4.0;
  double time_limit_seconds = 0.0;  // 0 = unlimited
  std::uint64_t seed = 0;

  RewardConfig reward() const;
  ReprConfig repr() const;
};

void validate(const TrainConfig& cfg);

// SMDP generalized advantage estimation over one environment's time series.
//   delta_t = R_t + exp(-beta F_t) V_next_t - V_t
//   A_t     = delta_t + (lambda exp(-beta))^F_t A_{t+1}
// next_values[t] is 0 after termination and V(s') after truncation;
// episode_end[t] cuts the recursion in both cases.
void smdp_gae(std::span<const double> rewards, std::span<const double> durations,
              std::span<const double> values, std::span<const double> next_values,
              std::span<const std::uint8_t> episode_end, double beta, double lambda,
              std::span<double> advantages, std::span<double> returns);

// Convenience form: values has T+1 entries (the last is the bootstrap value),
// dones marks terminal transitions.
void smdp_gae(std::span<const double> rewards, std::span<const double> durations,
              std::span<const double> values, std::span<const std::uint8_t> dones, double beta,
              double lambda, std::span<double> advantages, std::span<double> returns);

template <typename Scalar>
struct Minibatch {
  nn::Matrix<Scalar> obs;            // obs_dim x B
  std::vector<std::uint8_t> masks;   // B x n_act
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  int size() const { return static_cast<int>(actions.size()); }
};

struct LossConfig {
  double clip_ratio = 0.1;
  double value_coef = 0.5;
  double entropy_coef = 1.0e-4;
  bool normalize_advantages = true;
};

struct LossReport {
  double loss = 0.0;
  double policy_loss = 0.0;  // negative clipped surrogate
  double value_loss = 0.0;   // mean squared error
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// loss = -surrogate + value_coef * value_loss - entropy_coef * entropy.
// Gradients are accumulated into the spans when they are non-empty.
template <typename Scalar>
LossReport ppo_loss(const nn::ResidualNet<Scalar>& policy, const nn::ResidualNet<Scalar>& value,
                    const Minibatch<Scalar>& batch, const LossConfig& cfg,
                    std::span<Scalar> policy_grad = {}, std::span<Scalar> value_grad = {});

struct Agent {
  TrainConfig config;
  std::string chip;  // builtin name or serialized description tag
  int n_cells = 0;
  int n_actions = 0;
  std::int64_t learning_steps_done = 0;
  nn::ResidualNet<float> policy;
  nn::ResidualNet<float> value;

  ReprConfig repr() const { return config.repr(); }
};

Agent make_agent(const ChipSpec& spec, const std::string& chip_name, const TrainConfig& cfg);

struct TrainMetrics {
  std::int64_t iteration = 0;
  std::int64_t learning_steps = 0;
  std::int64_t env_steps = 0;
  double learning_rate = 0.0;
  int episodes = 0;
  double mean_episode_duration = 0.0;
  double solve_rate = 0.0;
  double entropy = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double elapsed_seconds = 0.0;
};

struct TrainHooks {
  std::function<void(const TrainMetrics&)> on_metrics;
  // Called after every iteration with the current agent; last good state.
  std::function<void(const Agent&)> on_checkpoint;
  int checkpoint_every = 10;  // iterations
};

// alpha * (1 - learned / total) with decay, alpha otherwise.
double scheduled_learning_rate(const TrainConfig& cfg, std::int64_t learned);

// Runs PPO until cfg.learning_steps gradient updates (or the time limit).
Agent train(const ChipSpec& spec, const std::string& chip_name, const TrainConfig& cfg,
            const TrainHooks& hooks = {});

// Episode step cap used during training: max(floor, multiplier * heuristic steps),
// or the floor when the heuristic finds no schedule.
int training_step_cap(const ChipSpec& spec, const Problem& problem, const TrainConfig& cfg);

}  // namespace ionshuttle
