#include "ionshuttle/animate.hpp"

#include <limits>
#include <memory>
#include <sstream>

#include "ionshuttle/env.hpp"
#include "ionshuttle/error.hpp"

namespace ionshuttle {

namespace {

template <typename Visit>
void replay(const ChipSpec& spec, const Problem& problem, const Schedule& schedule, Visit visit) {
  EnvConfig cfg;
  cfg.step_cap = std::numeric_limits<int>::max();
  ShuttleEnv env(std::make_shared<const ChipSpec>(spec), cfg);
  env.reset(problem);
  visit(-1, env, 0.0);
  for (int i = 0; i < schedule.steps(); ++i) {
    const ScheduleEntry& e = schedule.actions[i];
    require(!env.done(), ErrorKind::InvalidInput, "schedule continues after the circuit finished");
    require(e.action >= 0 && e.action < spec.num_actions(), ErrorKind::InvalidInput,
            "schedule action out of range");
    const StepResult r = env.step(e.action);
    visit(i, env, r.duration);
  }
}

std::vector<int> executed_ids(const GateDag& dag) {
  std::vector<int> out;
  for (int g = 0; g < dag.gate_count(); ++g) {
    if (dag.executed(g)) out.push_back(g);
  }
  return out;
}

}  // namespace

Json animate_frames(const ChipSpec& spec, const Problem& problem, const Schedule& schedule) {
  Json zones = Json::array();
  for (const Zone& z : spec.zones) {
    zones.push_back({{"name", z.name}, {"first_cell", z.first_cell + 1}, {"capacity", z.capacity}});
  }
  Json frames = Json::array();
  replay(spec, problem, schedule, [&](int i, const ShuttleEnv& env, double duration) {
    Json f = {{"frame", i + 1},
              {"elapsed", env.elapsed()},
              {"cells", env.chip_state().cells},
              {"executed", executed_ids(env.dag())},
              {"remaining", env.dag().remaining()}};
    if (i >= 0) {
      f["action"] = spec.actions[schedule.actions[i].action].name;
      f["duration"] = duration;
    } else {
      f["action"] = nullptr;
      f["duration"] = 0.0;
    }
    frames.push_back(f);
  });
  return {{"zones", zones}, {"frames", frames}};
}

std::string animate_text(const ChipSpec& spec, const Problem& problem, const Schedule& schedule) {
  std::ostringstream out;
  std::size_t width = 0;
  for (const Zone& z : spec.zones) width = std::max(width, z.name.size());
  replay(spec, problem, schedule, [&](int i, const ShuttleEnv& env, double duration) {
    out << "frame " << i + 1;
    if (i >= 0) out << "  " << spec.actions[schedule.actions[i].action].name << "  +" << duration;
    out << "  t=" << env.elapsed() << "  remaining=" << env.dag().remaining() << '\n';
    for (std::size_t zi = 0; zi < spec.zones.size(); ++zi) {
      const Zone& z = spec.zones[zi];
      out << "  " << z.name << std::string(width - z.name.size(), ' ') << " [";
      for (int s = 0; s < z.capacity; ++s) {
        const Qubit q = env.chip_state().cells[z.first_cell + s];
        if (s) out << ' ';
        if (q == kEmpty) out << '.';
        else out << q;
      }
      out << "]\n";
    }
  });
  return out.str();
}

}  // namespace ionshuttle
