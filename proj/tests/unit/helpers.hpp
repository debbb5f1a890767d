#pragma once

#include <functional>
#include <initializer_list>

#include "doctest.h"
#include "ionshuttle/chip.hpp"
#include "ionshuttle/error.hpp"

namespace testing {

using namespace ionshuttle;

inline constexpr Qubit E = kEmpty;

inline ChipState state_of(std::initializer_list<Qubit> cells) { return ChipState{cells}; }

inline int x_action(const ChipSpec& spec, const char* name) {
  for (int a = 0; a < spec.num_actions(); ++a) {
    if (spec.actions[a].name == name) return a;
  }
  FAIL("no action named " << name);
  return -1;
}

inline ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ionshuttle::Error");
  return ErrorKind::Io;
}

}  // namespace testing
