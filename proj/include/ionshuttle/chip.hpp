#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ionshuttle {

using Qubit = std::int32_t;
inline constexpr Qubit kEmpty = 0;

enum class ZoneKind : std::uint8_t { Compute, Spam, Storage, Ring };
enum class ChipFamily : std::uint8_t { X, Q };

const char* to_string(ZoneKind kind) noexcept;
const char* to_string(ChipFamily family) noexcept;

// A zone owns the contiguous cell range [first_cell, first_cell + capacity).
// Slot 0 of every zone is the cell adjacent to the junction.
struct Zone {
  ZoneKind kind;
  int capacity;
  int first_cell;
  std::string name;
};

enum class ActionKind : std::uint8_t {
  Transfer,   // junction-adjacent ion of source zone moves to destination zone
  RotateCw,   // ring contents shift slot j -> j+1
  RotateCcw,  // ring contents shift slot j -> j-1
};

struct ActionDef {
  ActionKind kind;
  int source_zone = -1;
  int dest_zone = -1;
  std::string name;
};

// Immutable chip description. Cell indices are 0-based internally and
// reported 1-based in encodings and serialized outputs.
struct ChipSpec {
  ChipFamily family;
  std::vector<Zone> zones;
  std::vector<ActionDef> actions;
  double default_duration = 1.0;
  double fast_rotation_duration = 1.0;
  int n_cells = 0;
  int n_max = 0;
  int compute_zone = -1;
  int spam_zone = -1;
  int ring_zone = -1;

  int num_actions() const noexcept { return static_cast<int>(actions.size()); }
  int zone_of_cell(int cell) const;
};

// Cell -> qubit mapping K; kEmpty marks an empty cell.
struct ChipState {
  std::vector<Qubit> cells;

  friend bool operator==(const ChipState&, const ChipState&) = default;
};

struct Transition {
  ChipState state;
  double duration;
};

ChipSpec build_x_chip(int storage_capacity_each);
ChipSpec build_q_chip(int ring_capacity, int spam_capacity, double fast_rotation_duration);

// Accepts "x50", "q50", "q50-spam3", and the general forms "x<2c>", "q<ring>",
// "q<ring>-spam<s>".
ChipSpec builtin_chip(std::string_view name);

ChipState empty_state(const ChipSpec& spec);

// Throws ContractViolation when the mapping breaks chip invariants.
void validate_state(const ChipSpec& spec, const ChipState& state);

int zone_count(const ChipSpec& spec, const ChipState& state, int zone);
bool zone_full(const ChipSpec& spec, const ChipState& state, int zone);

bool is_legal(const ChipSpec& spec, const ChipState& state, int action);
std::vector<int> legal_actions(const ChipSpec& spec, const ChipState& state);
// One byte per action, 1 = legal.
void legal_mask(const ChipSpec& spec, const ChipState& state, std::vector<std::uint8_t>& mask);

double action_duration(const ChipSpec& spec, const ChipState& state, int action);

// Applies a legal action in place and returns its duration.
double apply_action_inplace(const ChipSpec& spec, ChipState& state, int action);
Transition apply_action(const ChipSpec& spec, const ChipState& state, int action);

// Places `qubit` at the junction side of a zone, pushing occupants outward.
void push_into_zone(const ChipSpec& spec, ChipState& state, int zone, Qubit qubit);

std::vector<Qubit> qubits_in_zone(const ChipSpec& spec, const ChipState& state, int zone);
int cell_of_qubit(const ChipState& state, Qubit qubit);

}  // namespace ionshuttle
