#pragma once

#include <cstdint>
#include <vector>

#include "ionshuttle/baselines.hpp"
#include "ionshuttle/ppo.hpp"

namespace ionshuttle {

struct InferenceConfig {
  double time_budget_seconds = 0.0;  // 0 = limited by max_rollouts only
  int max_rollouts = 64;
  int step_cap = 0;  // 0 = 8x heuristic steps (4096 if the heuristic fails)
  std::uint64_t seed = 0;
  bool greedy = false;  // argmax actions; one rollout suffices
  int lockstep = 16;    // rollouts advanced together per network call
};

struct RolloutRecord {
  int index = 0;
  bool completed = false;  // false when the step cap was hit
  double total_duration = 0.0;
  int steps = 0;
  double finished_at_seconds = 0.0;
};

struct InferenceResult {
  Schedule schedule;
  std::vector<RolloutRecord> rollouts;
};

// Samples rollouts from the masked policy and keeps the shortest completed
// one. Rollout i draws from its own seeded stream, so the result for N
// rollouts is the minimum over a prefix of a fixed sequence. Ties go to the
// lowest index. Throws BudgetExhausted when no rollout completes.
InferenceResult rl_compile_detailed(const Agent& agent, const ChipSpec& spec,
                                    const Problem& problem, const InferenceConfig& cfg);

Schedule rl_compile(const Agent& agent, const ChipSpec& spec, const Problem& problem,
                    const InferenceConfig& cfg = {});

// Default per-rollout step cap.
int inference_step_cap(const ChipSpec& spec, const Problem& problem);

}  // namespace ionshuttle
