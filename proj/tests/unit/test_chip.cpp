#include <algorithm>
#include <random>

#include "helpers.hpp"

using namespace ionshuttle;
using testing::E;
using testing::kind_of;
using testing::state_of;
using testing::x_action;

TEST_CASE("x-chip sizes") {
  const ChipSpec c4 = build_x_chip(4);
  CHECK(c4.n_cells == 11);
  CHECK(c4.num_actions() == 12);
  const ChipSpec c1 = build_x_chip(1);
  CHECK(c1.n_cells == 5);
  CHECK(c1.num_actions() == 12);
  const ChipSpec c25 = build_x_chip(25);
  CHECK(c25.n_max == 50);
  CHECK(c25.n_cells == 53);
  CHECK(kind_of([] { build_x_chip(0); }) == ErrorKind::InvalidSpec);
  for (const ActionDef& a : c4.actions) CHECK(a.kind == ActionKind::Transfer);
}

TEST_CASE("builtin names") {
  CHECK(builtin_chip("x50").n_cells == 53);
  CHECK(builtin_chip("q50").n_cells == 53);
  const ChipSpec q3 = builtin_chip("q50-spam3");
  CHECK(q3.zones[q3.spam_zone].capacity == 3);
  CHECK(q3.n_cells == 55);
  CHECK(q3.fast_rotation_duration == 0.25);
  CHECK(kind_of([] { builtin_chip("y4"); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { builtin_chip("x5"); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("q-chip sizes and durations") {
  const ChipSpec q = build_q_chip(5, 1, 0.25);
  CHECK(q.n_cells == 8);
  CHECK(q.num_actions() == 6);
  CHECK(kind_of([] { build_q_chip(1, 1, 0.25); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { build_q_chip(5, 0, 0.25); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { build_q_chip(5, 1, 0.0); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([] { build_q_chip(5, 1, 1.5); }) == ErrorKind::InvalidSpec);

  // fast == default collapses to a uniform chip
  const ChipSpec u = build_q_chip(2, 1, 1.0);
  std::mt19937_64 rng(3);
  ChipState s = empty_state(u);
  s.cells[u.zones[u.ring_zone].first_cell] = 1;
  for (int i = 0; i < 200; ++i) {
    const auto legal = legal_actions(u, s);
    const int a = legal[rng() % legal.size()];
    CHECK(apply_action_inplace(u, s, a) == 1.0);
  }
}

TEST_CASE("legal actions: all ions in storage A") {
  const ChipSpec x = build_x_chip(4);
  // compute(2) spam(1) A(4) B(4)
  const ChipState s = state_of({E, E, E, 1, 2, 3, E, E, E, E, E});
  CHECK(is_legal(x, s, x_action(x, "StorageA->Compute")));
  CHECK(is_legal(x, s, x_action(x, "StorageA->Spam")));
  CHECK(is_legal(x, s, x_action(x, "StorageA->StorageB")));
  for (const char* n : {"Compute->Spam", "Compute->StorageA", "Compute->StorageB"}) {
    CHECK_FALSE(is_legal(x, s, x_action(x, n)));
  }
}

TEST_CASE("legal actions: q-chip ring full") {
  const ChipSpec q = build_q_chip(3, 1, 0.25);
  // compute(2) spam(1) ring(3)
  const ChipState s = state_of({4, E, E, 1, 2, 3});
  CHECK_FALSE(is_legal(q, s, x_action(q, "Compute->Ring")));
  CHECK(is_legal(q, s, x_action(q, "RotateCW")));
  CHECK(is_legal(q, s, x_action(q, "Ring->Compute")));
}

// Count-based legality rule, independent of the slot arithmetic in the library.
static bool count_rule(const ChipSpec& spec, const ChipState& s, int a) {
  const ActionDef& d = spec.actions[a];
  if (d.kind != ActionKind::Transfer) return true;
  const int src = zone_count(spec, s, d.source_zone);
  const int dst = zone_count(spec, s, d.dest_zone);
  if (spec.zones[d.dest_zone].kind == ZoneKind::Ring) {
    return src > 0 && s.cells[spec.zones[d.dest_zone].first_cell] == kEmpty &&
           (spec.zones[d.source_zone].kind != ZoneKind::Ring);
  }
  if (spec.zones[d.source_zone].kind == ZoneKind::Ring) {
    return s.cells[spec.zones[d.source_zone].first_cell] != kEmpty &&
           dst < spec.zones[d.dest_zone].capacity;
  }
  return src > 0 && dst < spec.zones[d.dest_zone].capacity;
}

TEST_CASE("legal actions: compute and storages full, brute force mask") {
  const ChipSpec x = build_x_chip(2);
  const ChipState s = state_of({1, 2, E, 3, 4, 5, 6});
  std::vector<int> expected;
  for (int a = 0; a < x.num_actions(); ++a) {
    if (count_rule(x, s, a)) expected.push_back(a);
  }
  CHECK(legal_actions(x, s) == expected);
  // Spam is the only zone with room.
  for (int a : legal_actions(x, s)) CHECK(x.actions[a].dest_zone == x.spam_zone);
  CHECK(is_legal(x, s, x_action(x, "Compute->Spam")));
}

TEST_CASE("apply_action: storage to compute compacts the register") {
  const ChipSpec x = build_x_chip(4);
  // Compute holds 4 and 1; register A holds 3 then 5 from the junction.
  ChipState s = state_of({4, 1, E, 3, 5, E, E, 2, E, E, E});
  CHECK_FALSE(is_legal(x, s, x_action(x, "StorageA->Compute")));
  CHECK(testing::kind_of([&] { apply_action(x, s, x_action(x, "StorageA->Compute")); }) ==
        ErrorKind::MaskedAction);
  const Transition t1 = apply_action(x, s, x_action(x, "Compute->Spam"));
  CHECK(t1.state == state_of({1, E, 4, 3, 5, E, E, 2, E, E, E}));
  CHECK(t1.duration == 1.0);
  const Transition t2 = apply_action(x, t1.state, x_action(x, "StorageA->Compute"));
  CHECK(t2.state == state_of({3, 1, 4, 5, E, E, E, 2, E, E, E}));
  CHECK(t2.duration == 1.0);
}

TEST_CASE("apply_action: q-chip rotations") {
  const ChipSpec q = build_q_chip(5, 1, 0.25);
  const int cw = x_action(q, "RotateCW");
  const int ccw = x_action(q, "RotateCCW");
  const ChipState empty = empty_state(q);
  const Transition t = apply_action(q, empty, cw);
  CHECK(t.state == empty);
  CHECK(t.duration == 0.25);

  // Ring slots from the junction: empty, 1, 2, 3, empty.
  const ChipState fig = state_of({E, E, E, E, 1, 2, 3, E});
  const Transition r = apply_action(q, fig, cw);
  CHECK(r.duration == 0.25);
  CHECK(r.state == state_of({E, E, E, E, E, 1, 2, 3}));
  const Transition back = apply_action(q, r.state, ccw);
  CHECK(back.state == fig);
  // Counter-clockwise brings qubit 1 to the junction: slow.
  CHECK(apply_action(q, fig, ccw).duration == 1.0);
}

TEST_CASE("chip properties under random walks") {
  std::mt19937_64 rng(11);
  for (const ChipSpec& spec : {build_x_chip(3), build_q_chip(5, 1, 0.25), build_q_chip(6, 3, 0.5)}) {
    for (int trial = 0; trial < 50; ++trial) {
      ChipState s = empty_state(spec);
      const int n = 2 + static_cast<int>(rng() % (spec.n_max - 1));
      for (Qubit q = 1; q <= n; ++q) {
        std::vector<int> room;
        for (int z = 0; z < static_cast<int>(spec.zones.size()); ++z) {
          if (spec.zones[z].kind != ZoneKind::Compute && !zone_full(spec, s, z)) room.push_back(z);
        }
        if (room.empty()) break;
        const Zone& z = spec.zones[room[rng() % room.size()]];
        if (z.kind == ZoneKind::Ring) {
          std::vector<int> free;
          for (int c = z.first_cell; c < z.first_cell + z.capacity; ++c) {
            if (s.cells[c] == kEmpty) free.push_back(c);
          }
          s.cells[free[rng() % free.size()]] = q;
        } else {
          push_into_zone(spec, s, static_cast<int>(&z - spec.zones.data()), q);
        }
      }
      std::vector<Qubit> before = s.cells;
      std::sort(before.begin(), before.end());
      for (int step = 0; step < 100; ++step) {
        std::vector<std::uint8_t> mask;
        legal_mask(spec, s, mask);
        for (int a = 0; a < spec.num_actions(); ++a) {
          CHECK(static_cast<bool>(mask[a]) == count_rule(spec, s, a));
          if (!mask[a]) {
            CHECK(kind_of([&] { apply_action(spec, s, a); }) == ErrorKind::MaskedAction);
          }
        }
        const auto legal = legal_actions(spec, s);
        REQUIRE_FALSE(legal.empty());
        const int a = legal[rng() % legal.size()];
        const Transition t1 = apply_action(spec, s, a);
        const Transition t2 = apply_action(spec, s, a);
        CHECK(t1.state == t2.state);
        CHECK(t1.duration == t2.duration);
        CHECK(t1.duration > 0.0);
        validate_state(spec, t1.state);  // stack prefixes, no duplicates
        std::vector<Qubit> after = t1.state.cells;
        std::sort(after.begin(), after.end());
        CHECK(after == before);
        if (spec.family == ChipFamily::Q && spec.actions[a].kind != ActionKind::Transfer) {
          const int inverse = spec.actions[a].kind == ActionKind::RotateCw ? 1 : 0;
          CHECK(apply_action(spec, t1.state, inverse).state == s);
        }
        s = t1.state;
      }
    }
  }
}

TEST_CASE("validate_state rejects broken mappings") {
  const ChipSpec x = build_x_chip(2);
  CHECK(kind_of([&] { validate_state(x, state_of({1, 1, E, E, E, E, E})); }) ==
        ErrorKind::ContractViolation);
  // gap at the junction side of register A
  CHECK(kind_of([&] { validate_state(x, state_of({E, E, E, E, 1, E, E})); }) ==
        ErrorKind::ContractViolation);
  CHECK(kind_of([&] { validate_state(x, state_of({E, E, E})); }) == ErrorKind::ContractViolation);
  validate_state(x, state_of({1, E, E, 2, 3, 4, E}));
}
