#include "ionshuttle/inference.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <numeric>

#include "ionshuttle/error.hpp"
#include "ionshuttle/io.hpp"

namespace ionshuttle {

int inference_step_cap(const ChipSpec& spec, const Problem& problem) {
  try {
    return std::max(1, 8 * heuristic_compile(spec, problem).steps());
  } catch (const Error&) {
    return 4096;
  }
}

namespace {

struct Rollout {
  int index;
  std::mt19937_64 rng;
  ShuttleEnv env;
  std::vector<int> actions;
  bool finished = false;
};

}  // namespace

InferenceResult rl_compile_detailed(const Agent& agent, const ChipSpec& spec,
                                    const Problem& problem, const InferenceConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  require(cfg.max_rollouts >= 1, ErrorKind::InvalidInput, "max_rollouts must be >= 1");
  require(cfg.time_budget_seconds >= 0.0, ErrorKind::InvalidInput,
          "time budget must be non-negative");
  check_compatible(agent, spec);

  auto shared_spec = std::make_shared<const ChipSpec>(spec);
  EnvConfig env_cfg;
  env_cfg.reward = agent.config.reward();
  env_cfg.step_cap = cfg.step_cap > 0 ? cfg.step_cap : inference_step_cap(spec, problem);
  const ReprConfig repr = agent.repr();
  const auto obs_dim = static_cast<Eigen::Index>(observation_size(spec, repr));
  const int n_act = spec.num_actions();

  InferenceResult result;
  {
    ShuttleEnv probe(shared_spec, env_cfg);
    probe.reset(problem);
    if (probe.done()) {
      result.schedule = schedule_from_actions(spec, problem, {}, "rl");
      result.rollouts.push_back(RolloutRecord{0, true, 0.0, 0, 0.0});
      return result;
    }
  }

  const int max_rollouts = cfg.greedy ? 1 : cfg.max_rollouts;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  int best = -1;
  double best_duration = 0.0;
  std::vector<int> best_actions;
  int next_index = 0;
  std::vector<std::uint8_t> mask;
  while (next_index < max_rollouts) {
    if (next_index > 0 && cfg.time_budget_seconds > 0.0 && elapsed() >= cfg.time_budget_seconds) {
      break;
    }
    const int group = std::min(std::max(1, cfg.lockstep), max_rollouts - next_index);
    std::vector<Rollout> live;
    live.reserve(group);
    for (int g = 0; g < group; ++g) {
      const int idx = next_index + g;
      std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(idx)};
      Rollout r{idx, std::mt19937_64(seq), ShuttleEnv(shared_spec, env_cfg), {}, false};
      r.env.reset(problem);
      live.push_back(std::move(r));
    }
    next_index += group;

    std::vector<int> active(group);
    std::iota(active.begin(), active.end(), 0);
    nn::Matrix<float> obs(obs_dim, group);
    std::vector<std::uint8_t> masks;
    while (!active.empty()) {
      const auto n = static_cast<Eigen::Index>(active.size());
      obs.resize(obs_dim, n);
      masks.assign(static_cast<std::size_t>(n) * n_act, 0);
      for (Eigen::Index k = 0; k < n; ++k) {
        const ShuttleEnv& env = live[active[k]].env;
        observe(spec, env.chip_state(), env.dag(), repr,
                std::span<float>(obs.col(k).data(), static_cast<std::size_t>(obs_dim)));
        env.mask(mask);
        std::copy(mask.begin(), mask.end(), masks.begin() + k * n_act);
      }
      const nn::Matrix<float> logits = agent.policy.forward(obs);
      const nn::MaskedCategorical<float> dist(logits, masks);
      std::vector<int> still;
      for (Eigen::Index k = 0; k < n; ++k) {
        Rollout& r = live[active[k]];
        const int a = cfg.greedy ? dist.argmax(static_cast<int>(k))
                                 : dist.sample(static_cast<int>(k), r.rng);
        r.actions.push_back(a);
        const StepResult step = r.env.step(a);
        if (step.done || step.truncated) {
          r.finished = step.done;
          result.rollouts.push_back(RolloutRecord{r.index, step.done, r.env.elapsed(),
                                                  r.env.steps(), elapsed()});
        } else {
          still.push_back(active[k]);
        }
      }
      active = std::move(still);
    }
    for (Rollout& r : live) {
      if (!r.finished) continue;
      const double d = r.env.elapsed();
      if (best < 0 || d < best_duration || (d == best_duration && r.index < best)) {
        best = r.index;
        best_duration = d;
        best_actions = r.actions;
      }
    }
  }
  std::sort(result.rollouts.begin(), result.rollouts.end(),
            [](const RolloutRecord& a, const RolloutRecord& b) { return a.index < b.index; });
  if (best < 0) {
    fail(ErrorKind::BudgetExhausted,
         "no rollout finished within the step cap of " + std::to_string(env_cfg.step_cap) +
             " actions (" + std::to_string(result.rollouts.size()) + " rollouts tried)");
  }
  result.schedule = schedule_from_actions(spec, problem, best_actions, "rl");
  result.schedule.compile_seconds = elapsed();
  return result;
}

Schedule rl_compile(const Agent& agent, const ChipSpec& spec, const Problem& problem,
                    const InferenceConfig& cfg) {
  return rl_compile_detailed(agent, spec, problem, cfg).schedule;
}

}  // namespace ionshuttle
