#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ionshuttle/chip.hpp"
#include "ionshuttle/circuit.hpp"

namespace ionshuttle {

struct ScheduleEntry {
  int action = 0;
  double duration = 0.0;
  std::vector<int> gates;  // gate ids executed right after this action

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct Schedule {
  std::vector<ScheduleEntry> actions;
  double total_duration = 0.0;
  std::string method;
  double compile_seconds = 0.0;

  int steps() const { return static_cast<int>(actions.size()); }
};

// Replays `actions` from the problem's start state and records durations and
// executed gates. Throws MaskedAction on an illegal action.
Schedule schedule_from_actions(const ChipSpec& spec, const Problem& problem,
                               const std::vector<int>& actions, std::string method);

// True iff replaying the schedule reproduces its durations and gate
// executions exactly and ends with every gate executed.
bool verify_schedule(const ChipSpec& spec, const Problem& problem, const Schedule& schedule,
                     std::string* why = nullptr);

struct HeuristicConfig {
  int window = 4;           // gates per serialized window (n_g)
  int candidates = 8;       // candidate orderings per window (n_p)
  int fallback_nodes = 200'000;
};

// Greedy windowed compiler: serialize a few front-reachable gates in several
// orders, orchestrate ions greedily for each, keep the cheapest window.
Schedule heuristic_compile(const ChipSpec& spec, const Problem& problem,
                           const HeuristicConfig& cfg = {});

// Greedy action sequence that brings qubits a and b into the compute zone.
// Falls back to breadth-first search when the greedy rules stall.
std::vector<int> orchestrate_pair(const ChipSpec& spec, const ChipState& state, Qubit a, Qubit b,
                                  int fallback_nodes = 200'000);

struct OracleBudget {
  std::int64_t max_expanded = 20'000'000;
  double time_limit_seconds = 600.0;
  bool canonicalize = true;
};

struct OracleResult {
  Schedule schedule;
  bool proven_optimal = false;
  std::int64_t expanded_states = 0;
};

// Uniform-cost search over (chip state, executed gates) with action
// durations as edge weights. When the budget runs out the heuristic schedule
// is returned with proven_optimal = false.
OracleResult exact_compile(const ChipSpec& spec, const Problem& problem,
                           const OracleBudget& budget = {});

// Hashable key: cell mapping and remaining gate list with qubits renamed in
// order of first use in the remaining circuit. Qubits without pending gates
// share one label.
std::string canonical_key(const ChipState& state, const GateDag& dag);

}  // namespace ionshuttle
