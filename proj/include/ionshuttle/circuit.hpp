#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ionshuttle/chip.hpp"

namespace ionshuttle {

using Rng = std::mt19937_64;

struct Gate {
  Qubit x;
  Qubit y;

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct Circuit {
  std::vector<Gate> gates;
  int num_qubits = 0;

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

// Throws InvalidCircuit on self-gates or labels outside 1..num_qubits.
void validate_circuit(const Circuit& circuit);

// One gate per line as "x y"; '#' starts a comment. num_qubits is the
// largest label seen.
Circuit parse_circuit(std::string_view text);
std::string format_circuit(const Circuit& circuit);

// Dependency DAG over two-qubit gates. Gates sharing an operand are ordered
// by their position in the sequence; edges only link each gate to the
// previous gate on each of its operands.
class GateDag {
 public:
  GateDag() = default;
  explicit GateDag(const Circuit& circuit);

  int gate_count() const noexcept { return static_cast<int>(gates_.size()); }
  int remaining() const noexcept { return remaining_; }
  int num_qubits() const noexcept { return num_qubits_; }
  const Gate& gate(int g) const { return gates_[g]; }
  int depth(int g) const { return depth_[g]; }
  bool executed(int g) const { return executed_[g] != 0; }
  std::span<const int> predecessors(int g) const { return preds_[g]; }
  std::span<const int> successors(int g) const { return succs_[g]; }

  // Remaining gates on `qubit` in sequence order.
  std::span<const int> pending_on(Qubit qubit) const;

  std::vector<int> front_layer() const;
  bool in_front(int g) const { return !executed(g) && depth_[g] == 0; }

  // Throws DependencyViolation unless g is in the front layer.
  void execute(int g);

 private:
  int recompute_depth(int g) const;

  std::vector<Gate> gates_;
  std::vector<std::vector<int>> preds_;
  std::vector<std::vector<int>> succs_;
  std::vector<int> depth_;
  std::vector<std::uint8_t> executed_;
  std::vector<std::vector<int>> chains_;  // per qubit label, index 0 unused
  std::vector<int> chain_head_;
  int remaining_ = 0;
  int num_qubits_ = 0;
};

std::vector<int> executable_gates(const GateDag& dag, const ChipSpec& spec, const ChipState& state);

struct Problem {
  Circuit circuit;
  ChipState placement;
};

// Draws a training problem: z ~ U{2..n_max}, Binomial(n_gates_budget, z/n_max)
// gates with uniform distinct operands, and a random storage placement.
Problem generate_random_problem(const ChipSpec& spec, int n_gates_budget, Rng& rng);

// Exactly `n_gates` gates over qubits 1..num_qubits.
Circuit generate_random_circuit(int num_qubits, int n_gates, Rng& rng);

// n layers, each a random permutation of 1..n paired off into floor(n/2) gates.
Circuit generate_qv_circuit(int n, Rng& rng);

// Each qubit (in label order) goes to a uniformly chosen storage register with
// room and is pushed in from the junction side. Q-chip qubits fill the ring
// from the junction slot.
ChipState random_placement(const ChipSpec& spec, int num_qubits, Rng& rng);

// Deterministic placement: fill storage registers (or the ring) in label order.
ChipState fill_placement(const ChipSpec& spec, int num_qubits);

}  // namespace ionshuttle
