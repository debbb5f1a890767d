#pragma once
// Exhaustive depth-first search over action sequences with branch and bound.
// Deliberately shares nothing with the uniform-cost oracle beyond the
// environment transition itself.

#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "ionshuttle/env.hpp"

namespace testing {

class DfsOracle {
 public:
  DfsOracle(std::shared_ptr<const ionshuttle::ChipSpec> spec, const ionshuttle::Problem& p,
            double upper_bound)
      : env_(std::move(spec), config()), best_(upper_bound) {
    env_.reset(p);
  }

  // Minimal total duration, or +inf if nothing beats the bound.
  double solve() {
    found_ = std::numeric_limits<double>::infinity();
    if (env_.done()) return 0.0;
    search(env_, 0.0);
    return found_;
  }

  long nodes() const { return nodes_; }

 private:
  static ionshuttle::EnvConfig config() {
    ionshuttle::EnvConfig c;
    c.step_cap = 1 << 30;
    return c;
  }

  static std::vector<int> key(const ionshuttle::ShuttleEnv& e) {
    std::vector<int> k(e.chip_state().cells.begin(), e.chip_state().cells.end());
    for (int g = 0; g < e.dag().gate_count(); ++g) k.push_back(e.dag().executed(g));
    return k;
  }

  void search(const ionshuttle::ShuttleEnv& e, double cost) {
    ++nodes_;
    auto [it, fresh] = seen_.try_emplace(key(e), cost);
    if (!fresh) {
      if (it->second <= cost) return;
      it->second = cost;
    }
    std::vector<std::uint8_t> mask;
    e.mask(mask);
    for (int a = 0; a < static_cast<int>(mask.size()); ++a) {
      if (!mask[a]) continue;
      ionshuttle::ShuttleEnv next = e;
      const double c = cost + next.step(a).duration;
      if (c > best_) continue;
      if (next.done()) {
        if (c < found_) found_ = c;
        best_ = c;
        continue;
      }
      search(next, c);
    }
  }

  ionshuttle::ShuttleEnv env_;
  double best_;
  double found_ = std::numeric_limits<double>::infinity();
  long nodes_ = 0;
  std::map<std::vector<int>, double> seen_;
};

}  // namespace testing
