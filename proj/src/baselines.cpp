#include "ionshuttle/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <queue>
#include <unordered_map>

#include "ionshuttle/env.hpp"
#include "ionshuttle/error.hpp"

namespace ionshuttle {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

EnvConfig replay_config() {
  EnvConfig cfg;
  cfg.step_cap = std::numeric_limits<int>::max();
  return cfg;
}

std::shared_ptr<const ChipSpec> share(const ChipSpec& spec) {
  return std::make_shared<const ChipSpec>(spec);
}

}  // namespace

Schedule schedule_from_actions(const ChipSpec& spec, const Problem& problem,
                               const std::vector<int>& actions, std::string method) {
  ShuttleEnv env(share(spec), replay_config());
  env.reset(problem);
  Schedule schedule;
  schedule.method = std::move(method);
  for (int a : actions) {
    const int before = env.dag().gate_count();
    std::vector<std::uint8_t> was(static_cast<std::size_t>(before));
    for (int g = 0; g < before; ++g) was[g] = env.dag().executed(g);
    const StepResult r = env.step(a);
    ScheduleEntry entry{a, r.duration, {}};
    for (int g = 0; g < before; ++g) {
      if (!was[g] && env.dag().executed(g)) entry.gates.push_back(g);
    }
    schedule.total_duration += r.duration;
    schedule.actions.push_back(std::move(entry));
  }
  return schedule;
}

bool verify_schedule(const ChipSpec& spec, const Problem& problem, const Schedule& schedule,
                     std::string* why) {
  auto reject = [&](std::string reason) {
    if (why) *why = std::move(reason);
    return false;
  };
  std::vector<int> actions;
  for (const ScheduleEntry& e : schedule.actions) actions.push_back(e.action);
  Schedule replay;
  try {
    replay = schedule_from_actions(spec, problem, actions, schedule.method);
  } catch (const Error& e) {
    return reject(e.what());
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (replay.actions[i].duration != schedule.actions[i].duration) {
      return reject("duration mismatch at step " + std::to_string(i));
    }
    if (replay.actions[i].gates != schedule.actions[i].gates) {
      return reject("gate execution mismatch at step " + std::to_string(i));
    }
  }
  if (replay.total_duration != schedule.total_duration) return reject("total duration mismatch");
  ShuttleEnv env(share(spec), replay_config());
  env.reset(problem);
  for (int a : actions) env.step(a);
  if (!env.done()) return reject("schedule leaves gates unexecuted");
  return true;
}

// ---------------------------------------------------------------------------
// Greedy ion orchestration

namespace {

bool in_compute(const ChipSpec& spec, const ChipState& state, Qubit q) {
  const Zone& c = spec.zones[spec.compute_zone];
  for (int s = 0; s < c.capacity; ++s) {
    if (state.cells[c.first_cell + s] == q) return true;
  }
  return false;
}

bool pair_ready(const ChipSpec& spec, const ChipState& state, Qubit a, Qubit b) {
  return in_compute(spec, state, a) && in_compute(spec, state, b);
}

int find_transfer(const ChipSpec& spec, int source, int dest) {
  for (int i = 0; i < spec.num_actions(); ++i) {
    const ActionDef& a = spec.actions[i];
    if (a.kind == ActionKind::Transfer && a.source_zone == source && a.dest_zone == dest) return i;
  }
  return -1;
}

int find_rotation(const ChipSpec& spec, ActionKind kind) {
  for (int i = 0; i < spec.num_actions(); ++i) {
    if (spec.actions[i].kind == kind) return i;
  }
  return -1;
}

std::vector<int> bfs_to_pair(const ChipSpec& spec, const ChipState& start, Qubit a, Qubit b,
                             int max_nodes) {
  struct Node {
    ChipState state;
    int parent;
    int action;
  };
  std::vector<Node> nodes{{start, -1, -1}};
  std::unordered_map<std::string, int> seen;
  auto key = [](const ChipState& s) {
    return std::string(reinterpret_cast<const char*>(s.cells.data()),
                       s.cells.size() * sizeof(Qubit));
  };
  seen.emplace(key(start), 0);
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (pair_ready(spec, nodes[head].state, a, b)) {
      std::vector<int> path;
      for (int n = static_cast<int>(head); nodes[n].parent >= 0; n = nodes[n].parent) {
        path.push_back(nodes[n].action);
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    if (static_cast<int>(nodes.size()) >= max_nodes) break;
    for (int act : legal_actions(spec, nodes[head].state)) {
      ChipState next = apply_action(spec, nodes[head].state, act).state;
      if (seen.emplace(key(next), static_cast<int>(nodes.size())).second) {
        nodes.push_back({std::move(next), static_cast<int>(head), act});
      }
    }
  }
  fail(ErrorKind::BudgetExhausted, "ion orchestration search exhausted its node budget");
}

// Zone (stack) position of a qubit: (zone, slot).
std::pair<int, int> locate(const ChipSpec& spec, const ChipState& state, Qubit q) {
  const int cell = cell_of_qubit(state, q);
  require(cell >= 0, ErrorKind::ContractViolation, "qubit " + std::to_string(q) + " not on chip");
  const int zone = spec.zone_of_cell(cell);
  return {zone, cell - spec.zones[zone].first_cell};
}

// Most free space first, ties to the lower zone index; zones holding a qubit
// we still need are used only as a last resort.
int best_parking(const ChipSpec& spec, const ChipState& state, std::initializer_list<int> excluded,
                 Qubit avoid) {
  int best = -1;
  std::tuple<int, int, int> best_rank{};
  for (int z = 0; z < static_cast<int>(spec.zones.size()); ++z) {
    if (z == spec.compute_zone) continue;
    if (std::find(excluded.begin(), excluded.end(), z) != excluded.end()) continue;
    const int free_slots = spec.zones[z].capacity - zone_count(spec, state, z);
    if (free_slots == 0) continue;
    bool holds_avoid = false;
    for (Qubit q : qubits_in_zone(spec, state, z)) holds_avoid = holds_avoid || q == avoid;
    const std::tuple<int, int, int> rank{holds_avoid ? 1 : 0, -free_slots, z};
    if (best < 0 || rank < best_rank) {
      best = z;
      best_rank = rank;
    }
  }
  return best;
}

// One greedy move toward {a, b} on the X-chip, or -1 when stuck.
int x_chip_move(const ChipSpec& spec, const ChipState& state, Qubit a, Qubit b) {
  const int compute = spec.compute_zone;
  const std::vector<Qubit> inside = qubits_in_zone(spec, state, compute);
  const bool has_stranger = std::any_of(inside.begin(), inside.end(),
                                        [&](Qubit q) { return q != a && q != b; });
  if (has_stranger) {
    const Qubit still_needed = !in_compute(spec, state, a) ? a : (!in_compute(spec, state, b) ? b : kEmpty);
    const int dest = best_parking(spec, state, {}, still_needed);
    return dest < 0 ? -1 : find_transfer(spec, compute, dest);
  }
  // Needed qubit closest to the junction first; ties go to a.
  Qubit target = kEmpty;
  std::pair<int, int> where{};
  for (Qubit q : {a, b}) {
    if (in_compute(spec, state, q)) continue;
    const auto loc = locate(spec, state, q);
    if (target == kEmpty || loc.second < where.second) {
      target = q;
      where = loc;
    }
  }
  if (where.second == 0) return find_transfer(spec, where.first, compute);
  const Qubit other = target == a ? b : a;
  const int dest = best_parking(spec, state, {where.first}, other);
  return dest < 0 ? -1 : find_transfer(spec, where.first, dest);
}

// Rotation that brings the nearest cell satisfying `pred` to the junction slot.
int rotate_toward(const ChipSpec& spec, const ChipState& state, auto pred) {
  const Zone& ring = spec.zones[spec.ring_zone];
  const int n = ring.capacity;
  for (int dist = 1; dist <= n / 2 + 1; ++dist) {
    // Clockwise brings slot n-dist to the junction after `dist` turns.
    if (pred(state.cells[ring.first_cell + (n - dist) % n])) {
      return find_rotation(spec, ActionKind::RotateCw);
    }
    if (pred(state.cells[ring.first_cell + dist % n])) {
      return find_rotation(spec, ActionKind::RotateCcw);
    }
  }
  return -1;
}

int q_chip_move(const ChipSpec& spec, const ChipState& state, Qubit a, Qubit b) {
  const int compute = spec.compute_zone;
  const int spam = spec.spam_zone;
  const int ring = spec.ring_zone;
  const Zone& ring_zone = spec.zones[ring];
  const Qubit at_junction = state.cells[ring_zone.first_cell];
  auto is_empty = [](Qubit q) { return q == kEmpty; };

  const std::vector<Qubit> inside = qubits_in_zone(spec, state, compute);
  const bool has_stranger = std::any_of(inside.begin(), inside.end(),
                                        [&](Qubit q) { return q != a && q != b; });
  if (has_stranger) {
    if (at_junction == kEmpty) return find_transfer(spec, compute, ring);
    return rotate_toward(spec, state, is_empty);
  }
  Qubit target = kEmpty;
  for (Qubit q : {a, b}) {
    if (!in_compute(spec, state, q)) {
      target = q;
      break;
    }
  }
  const auto [zone, slot] = locate(spec, state, target);
  if (zone == ring) {
    if (at_junction == target) return find_transfer(spec, ring, compute);
    return rotate_toward(spec, state, [&](Qubit q) { return q == target; });
  }
  // Target sits in SPAM: move its blockers, then itself, onto the ring.
  (void)slot;
  if (at_junction == kEmpty) return find_transfer(spec, spam, ring);
  return rotate_toward(spec, state, is_empty);
}

}  // namespace

std::vector<int> orchestrate_pair(const ChipSpec& spec, const ChipState& state, Qubit a, Qubit b,
                                  int fallback_nodes) {
  ChipState cur = state;
  std::vector<int> actions;
  const int guard = 4 * spec.n_cells + 16;
  while (!pair_ready(spec, cur, a, b)) {
    const int move = static_cast<int>(actions.size()) >= guard
                         ? -1
                         : (spec.family == ChipFamily::X ? x_chip_move(spec, cur, a, b)
                                                         : q_chip_move(spec, cur, a, b));
    if (move < 0 || !is_legal(spec, cur, move)) {
      std::vector<int> tail = bfs_to_pair(spec, cur, a, b, fallback_nodes);
      actions.insert(actions.end(), tail.begin(), tail.end());
      return actions;
    }
    apply_action_inplace(spec, cur, move);
    actions.push_back(move);
  }
  return actions;
}

namespace {

int gate_cost_estimate(const ChipSpec& spec, const ChipState& state, const Gate& g) {
  int cost = 0;
  for (Qubit q : {g.x, g.y}) {
    if (in_compute(spec, state, q)) continue;
    const int cell = cell_of_qubit(state, q);
    const int zone = spec.zone_of_cell(cell);
    cost += 1 + cell - spec.zones[zone].first_cell;
  }
  return cost;
}

// First `limit` orderings of up to `window` gates, exploring cheaper-looking
// front gates first (ties by gate id).
void enumerate_windows(const ChipSpec& spec, const ChipState& state, GateDag dag, int window,
                       int limit, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(out.size()) >= limit) return;
  if (static_cast<int>(prefix.size()) == window || dag.remaining() == 0) {
    out.push_back(prefix);
    return;
  }
  std::vector<int> front = dag.front_layer();
  std::stable_sort(front.begin(), front.end(), [&](int l, int r) {
    return gate_cost_estimate(spec, state, dag.gate(l)) < gate_cost_estimate(spec, state, dag.gate(r));
  });
  for (int g : front) {
    GateDag next = dag;
    next.execute(g);
    prefix.push_back(g);
    enumerate_windows(spec, state, std::move(next), window, limit, prefix, out);
    prefix.pop_back();
    if (static_cast<int>(out.size()) >= limit) return;
  }
}

}  // namespace

Schedule heuristic_compile(const ChipSpec& spec, const Problem& problem,
                           const HeuristicConfig& cfg) {
  const auto start = Clock::now();
  ShuttleEnv env(share(spec), replay_config());
  env.reset(problem);
  std::vector<int> committed;
  while (!env.done()) {
    std::vector<std::vector<int>> windows;
    std::vector<int> prefix;
    enumerate_windows(spec, env.chip_state(), env.dag(), cfg.window, cfg.candidates, prefix,
                      windows);
    std::vector<int> best_actions;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const std::vector<int>& order : windows) {
      ShuttleEnv sim = env;
      std::vector<int> actions;
      try {
        for (int g : order) {
          if (sim.dag().executed(g)) continue;
          const Gate& gate = sim.dag().gate(g);
          for (int a : orchestrate_pair(spec, sim.chip_state(), gate.x, gate.y,
                                        cfg.fallback_nodes)) {
            sim.step(a);
            actions.push_back(a);
          }
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::BudgetExhausted) throw;
        continue;
      }
      const double cost = sim.elapsed() - env.elapsed();
      if (cost < best_cost) {
        best_cost = cost;
        best_actions = std::move(actions);
      }
    }
    require(best_cost < std::numeric_limits<double>::infinity(), ErrorKind::BudgetExhausted,
            "heuristic could not orchestrate any candidate window");
    for (int a : best_actions) env.step(a);
    committed.insert(committed.end(), best_actions.begin(), best_actions.end());
  }
  Schedule schedule = schedule_from_actions(spec, problem, committed, "heuristic");
  schedule.compile_seconds = seconds_since(start);
  return schedule;
}

// ---------------------------------------------------------------------------
// Exact uniform-cost search

namespace {

struct SearchCircuit {
  std::vector<Gate> gates;
  std::vector<std::uint64_t> pred_mask;
  std::uint64_t all = 0;
};

SearchCircuit make_search_circuit(const Circuit& circuit) {
  const GateDag dag(circuit);
  SearchCircuit sc;
  sc.gates = circuit.gates;
  sc.pred_mask.assign(sc.gates.size(), 0);
  for (int g = 0; g < dag.gate_count(); ++g) {
    for (int p : dag.predecessors(g)) sc.pred_mask[g] |= std::uint64_t{1} << p;
  }
  sc.all = sc.gates.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << sc.gates.size()) - 1;
  return sc;
}

std::uint64_t run_ready(const ChipSpec& spec, const ChipState& state, const SearchCircuit& sc,
                        std::uint64_t executed) {
  const Zone& c = spec.zones[spec.compute_zone];
  auto inside = [&](Qubit q) {
    for (int s = 0; s < c.capacity; ++s) {
      if (state.cells[c.first_cell + s] == q) return true;
    }
    return false;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t g = 0; g < sc.gates.size(); ++g) {
      const std::uint64_t bit = std::uint64_t{1} << g;
      if (executed & bit) continue;
      if (sc.pred_mask[g] & ~executed) continue;
      if (inside(sc.gates[g].x) && inside(sc.gates[g].y)) {
        executed |= bit;
        changed = true;
      }
    }
  }
  return executed;
}

void append_u16(std::string& key, unsigned value) {
  key.push_back(static_cast<char>(value & 0xFF));
  key.push_back(static_cast<char>((value >> 8) & 0xFF));
}

template <typename IsPending>
std::string canonical_key_impl(const ChipState& state, const std::vector<Gate>& gates,
                               IsPending pending) {
  Qubit max_label = 0;
  for (Qubit q : state.cells) max_label = std::max(max_label, q);
  for (const Gate& g : gates) max_label = std::max({max_label, g.x, g.y});
  std::vector<unsigned> rename(static_cast<std::size_t>(max_label) + 1, 0);
  unsigned next = 1;
  for (std::size_t g = 0; g < gates.size(); ++g) {
    if (!pending(g)) continue;
    for (Qubit q : {gates[g].x, gates[g].y}) {
      if (rename[q] == 0) rename[q] = next++;
    }
  }
  constexpr unsigned kIdle = 0xFFFF;
  std::string key;
  key.reserve(2 * state.cells.size() + 1 + 4 * gates.size());
  for (Qubit q : state.cells) append_u16(key, q == kEmpty ? 0 : (rename[q] ? rename[q] : kIdle));
  key.push_back('|');
  for (std::size_t g = 0; g < gates.size(); ++g) {
    if (!pending(g)) continue;
    append_u16(key, rename[gates[g].x]);
    append_u16(key, rename[gates[g].y]);
  }
  return key;
}

std::string raw_key(const ChipState& state, std::uint64_t executed) {
  std::string key(reinterpret_cast<const char*>(state.cells.data()),
                  state.cells.size() * sizeof(Qubit));
  key.append(reinterpret_cast<const char*>(&executed), sizeof(executed));
  return key;
}

}  // namespace

std::string canonical_key(const ChipState& state, const GateDag& dag) {
  std::vector<Gate> gates;
  for (int g = 0; g < dag.gate_count(); ++g) gates.push_back(dag.gate(g));
  return canonical_key_impl(state, gates, [&](std::size_t g) { return !dag.executed(static_cast<int>(g)); });
}

OracleResult exact_compile(const ChipSpec& spec, const Problem& problem,
                           const OracleBudget& budget) {
  const auto start = Clock::now();
  require(problem.circuit.gates.size() <= 64, ErrorKind::InvalidInput,
          "exact search supports at most 64 gates");
  {
    // Validates capacity and placement the same way the environment does.
    ShuttleEnv probe(share(spec), replay_config());
    probe.reset(problem);
  }
  const SearchCircuit sc = make_search_circuit(problem.circuit);

  struct Node {
    ChipState state;
    std::uint64_t executed;
    int parent;
    int action;
  };
  struct Entry {
    double cost;
    std::int64_t seq;
    int node;
    bool operator>(const Entry& o) const {
      return cost != o.cost ? cost > o.cost : seq > o.seq;
    }
  };
  auto key_of = [&](const ChipState& s, std::uint64_t executed) {
    if (!budget.canonicalize) return raw_key(s, executed);
    return canonical_key_impl(s, sc.gates, [&](std::size_t g) {
      return (executed & (std::uint64_t{1} << g)) == 0;
    });
  };

  std::vector<Node> nodes;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_map<std::string, std::pair<double, bool>> best;  // cost, settled
  std::int64_t seq = 0;

  const std::uint64_t start_exec = run_ready(spec, problem.placement, sc, 0);
  nodes.push_back({problem.placement, start_exec, -1, -1});
  best.emplace(key_of(problem.placement, start_exec), std::make_pair(0.0, false));
  open.push({0.0, seq++, 0});

  OracleResult result;
  int goal = -1;
  while (!open.empty()) {
    const Entry top = open.top();
    open.pop();
    const Node& node = nodes[top.node];
    auto& slot = best[key_of(node.state, node.executed)];
    if (slot.second || top.cost > slot.first) continue;
    slot.second = true;
    if (node.executed == sc.all) {
      goal = top.node;
      break;
    }
    ++result.expanded_states;
    if (result.expanded_states >= budget.max_expanded ||
        ((result.expanded_states & 1023) == 0 && seconds_since(start) > budget.time_limit_seconds)) {
      break;
    }
    const ChipState state = node.state;
    const std::uint64_t executed = node.executed;
    for (int a : legal_actions(spec, state)) {
      ChipState next = state;
      const double cost = top.cost + apply_action_inplace(spec, next, a);
      const std::uint64_t next_exec = run_ready(spec, next, sc, executed);
      auto [it, inserted] =
          best.try_emplace(key_of(next, next_exec), std::make_pair(cost, false));
      if (!inserted) {
        if (it->second.second || cost >= it->second.first) continue;
        it->second.first = cost;
      }
      nodes.push_back({std::move(next), next_exec, top.node, a});
      open.push({cost, seq++, static_cast<int>(nodes.size()) - 1});
    }
  }

  if (goal >= 0) {
    std::vector<int> actions;
    for (int n = goal; nodes[n].parent >= 0; n = nodes[n].parent) actions.push_back(nodes[n].action);
    std::reverse(actions.begin(), actions.end());
    result.schedule = schedule_from_actions(spec, problem, actions, "exact");
    result.proven_optimal = true;
  } else {
    result.schedule = heuristic_compile(spec, problem);
    result.schedule.method = "exact";
    result.proven_optimal = false;
  }
  result.schedule.compile_seconds = seconds_since(start);
  return result;
}

}  // namespace ionshuttle
