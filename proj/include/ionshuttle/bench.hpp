#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ionshuttle/baselines.hpp"
#include "ionshuttle/inference.hpp"
#include "ionshuttle/io.hpp"

namespace ionshuttle {

enum class SuiteKind { Random, QuantumVolume };

struct SuiteSpec {
  SuiteKind kind = SuiteKind::Random;
  int instances = 100;
  int num_qubits = 4;
  int n_gates = 6;  // ignored for quantum volume
  std::uint64_t seed = 0;
};

// Instance i uses its own stream seeded with (seed, i); placements are random.
std::vector<Problem> make_suite(const ChipSpec& spec, const SuiteSpec& suite);

struct BenchConfig {
  SuiteSpec suite;
  std::vector<std::string> methods = {"heuristic", "exact"};  // "rl" needs an agent
  std::vector<int> rollout_budgets = {1, 4, 16, 64};
  OracleBudget oracle{20'000'000, 1e9, true};
  InferenceConfig inference;
  int bootstrap_draws = 20'000;
  std::uint64_t seed = 0;
};

struct BenchRow {
  int instance = 0;
  std::string method;
  int budget = 0;  // rollouts for rl, 0 otherwise
  int two_qubit_gates = 0;
  int actions = 0;
  double duration = 0.0;
  double compile_seconds = 0.0;
  std::optional<double> optimum;  // proven optimal duration
  bool solved = true;
  bool proven_optimal = false;  // exact rows only

  std::optional<double> gap() const {
    if (!optimum || !solved) return std::nullopt;
    return duration - *optimum;
  }
};

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Normal-approximation 95% interval of the mean.
Interval mean_ci95(const std::vector<double>& xs);

struct MethodSummary {
  std::string method;
  int budget = 0;
  int instances = 0;
  int solved = 0;
  Interval duration;
  Interval duration_per_gate;
  Interval gap;  // over instances with a known optimum
  int known_gaps = 0;
  std::array<int, 4> gap_histogram{};  // 0, 1, 2, >2 steps
};

struct BudgetPoint {
  int rollouts = 0;
  Interval duration;
  std::optional<Interval> gap;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<MethodSummary> summaries;
  std::vector<BudgetPoint> budget_curve;  // bootstrap over rl rollouts
  std::vector<std::vector<RolloutRecord>> rollouts;  // per instance, rl only
};

BenchReport run_bench(const ChipSpec& spec, const BenchConfig& cfg, const Agent* agent);

// Deterministic columns only; timings go to the JSON report.
std::string report_csv(const BenchReport& report);
Json report_json(const BenchReport& report);

}  // namespace ionshuttle
