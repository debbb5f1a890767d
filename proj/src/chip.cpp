#include "ionshuttle/chip.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "ionshuttle/error.hpp"

namespace ionshuttle {

const char* to_string(ZoneKind kind) noexcept {
  switch (kind) {
    case ZoneKind::Compute: return "compute";
    case ZoneKind::Spam: return "spam";
    case ZoneKind::Storage: return "storage";
    case ZoneKind::Ring: return "ring";
  }
  return "?";
}

const char* to_string(ChipFamily family) noexcept {
  return family == ChipFamily::X ? "x" : "q";
}

int ChipSpec::zone_of_cell(int cell) const {
  for (int z = 0; z < static_cast<int>(zones.size()); ++z) {
    const Zone& zone = zones[z];
    if (cell >= zone.first_cell && cell < zone.first_cell + zone.capacity) return z;
  }
  fail(ErrorKind::ContractViolation, "cell index out of range: " + std::to_string(cell));
}

namespace {

void add_zone(ChipSpec& spec, ZoneKind kind, int capacity, std::string name) {
  spec.zones.push_back(Zone{kind, capacity, spec.n_cells, std::move(name)});
  spec.n_cells += capacity;
}

bool is_stack(const Zone& zone) { return zone.kind != ZoneKind::Ring; }

}  // namespace

ChipSpec build_x_chip(int storage_capacity_each) {
  require(storage_capacity_each >= 1, ErrorKind::InvalidSpec,
          "x-chip storage capacity must be >= 1");
  ChipSpec spec;
  spec.family = ChipFamily::X;
  add_zone(spec, ZoneKind::Compute, 2, "Compute");
  add_zone(spec, ZoneKind::Spam, 1, "Spam");
  add_zone(spec, ZoneKind::Storage, storage_capacity_each, "StorageA");
  add_zone(spec, ZoneKind::Storage, storage_capacity_each, "StorageB");
  spec.compute_zone = 0;
  spec.spam_zone = 1;
  spec.n_max = 2 * storage_capacity_each;
  const int nz = static_cast<int>(spec.zones.size());
  for (int s = 0; s < nz; ++s) {
    for (int d = 0; d < nz; ++d) {
      if (s == d) continue;
      spec.actions.push_back(ActionDef{ActionKind::Transfer, s, d,
                                       spec.zones[s].name + "->" + spec.zones[d].name});
    }
  }
  return spec;
}

ChipSpec build_q_chip(int ring_capacity, int spam_capacity, double fast_rotation_duration) {
  require(ring_capacity >= 2, ErrorKind::InvalidSpec, "q-chip ring capacity must be >= 2");
  require(spam_capacity >= 1, ErrorKind::InvalidSpec, "q-chip spam capacity must be >= 1");
  require(fast_rotation_duration > 0.0 && fast_rotation_duration <= 1.0, ErrorKind::InvalidSpec,
          "fast rotation duration must lie in (0, default duration]");
  ChipSpec spec;
  spec.family = ChipFamily::Q;
  spec.fast_rotation_duration = fast_rotation_duration;
  add_zone(spec, ZoneKind::Compute, 2, "Compute");
  add_zone(spec, ZoneKind::Spam, spam_capacity, "Spam");
  add_zone(spec, ZoneKind::Ring, ring_capacity, "Ring");
  spec.compute_zone = 0;
  spec.spam_zone = 1;
  spec.ring_zone = 2;
  spec.n_max = ring_capacity;
  spec.actions = {
      {ActionKind::RotateCw, -1, -1, "RotateCW"},
      {ActionKind::RotateCcw, -1, -1, "RotateCCW"},
      {ActionKind::Transfer, 2, 0, "Ring->Compute"},
      {ActionKind::Transfer, 2, 1, "Ring->Spam"},
      {ActionKind::Transfer, 0, 2, "Compute->Ring"},
      {ActionKind::Transfer, 1, 2, "Spam->Ring"},
  };
  return spec;
}

ChipSpec builtin_chip(std::string_view name) {
  auto parse_int = [&](std::string_view digits) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
      fail(ErrorKind::InvalidSpec, "unknown builtin chip: " + std::string(name));
    }
    return value;
  };
  if (name.size() < 2) fail(ErrorKind::InvalidSpec, "unknown builtin chip: " + std::string(name));
  if (name.front() == 'x') {
    const int n = parse_int(name.substr(1));
    require(n >= 2 && n % 2 == 0, ErrorKind::InvalidSpec, "x-chip size must be even and >= 2");
    return build_x_chip(n / 2);
  }
  if (name.front() == 'q') {
    std::string_view rest = name.substr(1);
    int spam = 1;
    if (auto pos = rest.find("-spam"); pos != std::string_view::npos) {
      spam = parse_int(rest.substr(pos + 5));
      rest = rest.substr(0, pos);
    }
    return build_q_chip(parse_int(rest), spam, 0.25);
  }
  fail(ErrorKind::InvalidSpec, "unknown builtin chip: " + std::string(name));
}

ChipState empty_state(const ChipSpec& spec) {
  return ChipState{std::vector<Qubit>(static_cast<std::size_t>(spec.n_cells), kEmpty)};
}

void validate_state(const ChipSpec& spec, const ChipState& state) {
  require(static_cast<int>(state.cells.size()) == spec.n_cells, ErrorKind::ContractViolation,
          "chip state has wrong cell count");
  std::unordered_set<Qubit> seen;
  for (Qubit q : state.cells) {
    if (q == kEmpty) continue;
    require(q > 0, ErrorKind::ContractViolation, "negative qubit label");
    require(seen.insert(q).second, ErrorKind::ContractViolation,
            "duplicate qubit label " + std::to_string(q));
  }
  for (const Zone& zone : spec.zones) {
    if (!is_stack(zone)) continue;
    bool hole = false;
    for (int s = 0; s < zone.capacity; ++s) {
      const bool occupied = state.cells[zone.first_cell + s] != kEmpty;
      require(!(hole && occupied), ErrorKind::ContractViolation,
              "zone " + zone.name + " is not compacted toward the junction");
      hole = hole || !occupied;
    }
  }
}

int zone_count(const ChipSpec& spec, const ChipState& state, int zone) {
  const Zone& z = spec.zones[zone];
  int count = 0;
  for (int s = 0; s < z.capacity; ++s) count += state.cells[z.first_cell + s] != kEmpty;
  return count;
}

bool zone_full(const ChipSpec& spec, const ChipState& state, int zone) {
  return zone_count(spec, state, zone) == spec.zones[zone].capacity;
}

bool is_legal(const ChipSpec& spec, const ChipState& state, int action) {
  if (action < 0 || action >= spec.num_actions()) return false;
  const ActionDef& a = spec.actions[action];
  if (a.kind != ActionKind::Transfer) return true;
  const Zone& src = spec.zones[a.source_zone];
  const Zone& dst = spec.zones[a.dest_zone];
  // Both stacks and the ring exchange ions through slot 0.
  if (state.cells[src.first_cell] == kEmpty) return false;
  if (dst.kind == ZoneKind::Ring) return state.cells[dst.first_cell] == kEmpty;
  return state.cells[dst.first_cell + dst.capacity - 1] == kEmpty;
}

std::vector<int> legal_actions(const ChipSpec& spec, const ChipState& state) {
  std::vector<int> out;
  for (int a = 0; a < spec.num_actions(); ++a) {
    if (is_legal(spec, state, a)) out.push_back(a);
  }
  return out;
}

void legal_mask(const ChipSpec& spec, const ChipState& state, std::vector<std::uint8_t>& mask) {
  mask.resize(static_cast<std::size_t>(spec.num_actions()));
  for (int a = 0; a < spec.num_actions(); ++a) mask[a] = is_legal(spec, state, a) ? 1 : 0;
}

double action_duration(const ChipSpec& spec, const ChipState& state, int action) {
  const ActionDef& a = spec.actions[action];
  if (a.kind == ActionKind::Transfer) return spec.default_duration;
  const Zone& ring = spec.zones[spec.ring_zone];
  const int first = ring.first_cell;
  const int incoming = a.kind == ActionKind::RotateCw ? first + ring.capacity - 1 : first + 1;
  const bool fast = state.cells[first] == kEmpty && state.cells[incoming] == kEmpty;
  return fast ? spec.fast_rotation_duration : spec.default_duration;
}

void push_into_zone(const ChipSpec& spec, ChipState& state, int zone, Qubit qubit) {
  const Zone& z = spec.zones[zone];
  auto begin = state.cells.begin() + z.first_cell;
  if (z.kind == ZoneKind::Ring) {
    *begin = qubit;
    return;
  }
  std::shift_right(begin, begin + z.capacity, 1);
  *begin = qubit;
}

double apply_action_inplace(const ChipSpec& spec, ChipState& state, int action) {
  if (!is_legal(spec, state, action)) {
    fail(ErrorKind::MaskedAction, "action " + std::to_string(action) + " is not legal");
  }
  const double duration = action_duration(spec, state, action);
  const ActionDef& a = spec.actions[action];
  if (a.kind == ActionKind::Transfer) {
    const Zone& src = spec.zones[a.source_zone];
    auto begin = state.cells.begin() + src.first_cell;
    const Qubit moving = *begin;
    if (src.kind == ZoneKind::Ring) {
      *begin = kEmpty;
    } else {
      std::shift_left(begin, begin + src.capacity, 1);
      *(begin + src.capacity - 1) = kEmpty;
    }
    push_into_zone(spec, state, a.dest_zone, moving);
  } else {
    const Zone& ring = spec.zones[spec.ring_zone];
    auto begin = state.cells.begin() + ring.first_cell;
    auto end = begin + ring.capacity;
    if (a.kind == ActionKind::RotateCw) {
      std::rotate(begin, end - 1, end);
    } else {
      std::rotate(begin, begin + 1, end);
    }
  }
  return duration;
}

Transition apply_action(const ChipSpec& spec, const ChipState& state, int action) {
  Transition t{state, 0.0};
  t.duration = apply_action_inplace(spec, t.state, action);
  return t;
}

std::vector<Qubit> qubits_in_zone(const ChipSpec& spec, const ChipState& state, int zone) {
  const Zone& z = spec.zones[zone];
  std::vector<Qubit> out;
  for (int s = 0; s < z.capacity; ++s) {
    if (Qubit q = state.cells[z.first_cell + s]; q != kEmpty) out.push_back(q);
  }
  return out;
}

int cell_of_qubit(const ChipState& state, Qubit qubit) {
  auto it = std::find(state.cells.begin(), state.cells.end(), qubit);
  return it == state.cells.end() ? -1 : static_cast<int>(it - state.cells.begin());
}

}  // namespace ionshuttle
