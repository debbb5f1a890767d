#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ionshuttle/chip.hpp"
#include "ionshuttle/circuit.hpp"

namespace ionshuttle {

// Per-cell occupancy plus, for each lookahead depth, the 1-based cell of the
// other operand of that qubit's gate at this depth (0 for "no gate").
struct EncodingMatrix {
  int n_cells = 0;
  int k_lookahead = 0;
  std::vector<int> occupied;  // n_cells
  std::vector<int> partner;   // n_cells * k_lookahead, row-major

  int partner_cell(int cell, int depth) const { return partner[cell * k_lookahead + depth]; }

  friend bool operator==(const EncodingMatrix&, const EncodingMatrix&) = default;
};

inline constexpr int kNoCell = 0;

EncodingMatrix encode(const ChipState& state, const GateDag& dag, int k_lookahead);

// (x_norm, cos(x_norm*pi*2^i)..., sin(x_norm*pi*2^i)...), length 2b+1;
// all zeros for an absent value.
void sinusoidal(std::optional<double> x, double x_max, int bands, std::span<float> out);
std::vector<double> sinusoidal(std::optional<double> x, double x_max, int bands);

enum class NumericEncoding { Sinusoidal, Linear };
enum class Representation { Proposed, Naive };

struct ReprConfig {
  Representation representation = Representation::Proposed;
  NumericEncoding encoding = NumericEncoding::Sinusoidal;
  int k_lookahead = 4;
  int b_cell = 6;
  int b_total = 7;
  // Upper end of the remaining-gate embedding; also the gate capacity of the
  // naive representation.
  int n_gates_budget = 1275;
};

std::size_t observation_size(const ChipSpec& spec, const ReprConfig& cfg);

// Writes the configured observation into `out` (size observation_size()).
void observe(const ChipSpec& spec, const ChipState& state, const GateDag& dag,
             const ReprConfig& cfg, std::span<float> out);
std::vector<float> observe(const ChipSpec& spec, const ChipState& state, const GateDag& dag,
                           const ReprConfig& cfg);

// Qubit label per cell followed by the remaining gates' operand labels in
// sequence order, zero padded to 2 * gate_capacity entries.
std::vector<float> observe_naive(const ChipState& state, const GateDag& dag, int gate_capacity);

}  // namespace ionshuttle
