#include "ionshuttle/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "ionshuttle/error.hpp"

namespace ionshuttle {

std::vector<Problem> make_suite(const ChipSpec& spec, const SuiteSpec& suite) {
  require(suite.instances >= 0, ErrorKind::InvalidInput, "instance count must be non-negative");
  require(suite.num_qubits >= 2 && suite.num_qubits <= spec.n_max, ErrorKind::InvalidInput,
          "suite qubit count must lie in [2, " + std::to_string(spec.n_max) + "]");
  std::vector<Problem> out;
  for (int i = 0; i < suite.instances; ++i) {
    std::seed_seq seq{suite.seed, static_cast<std::uint64_t>(i)};
    Rng rng(seq);
    Problem p;
    p.circuit = suite.kind == SuiteKind::QuantumVolume
                    ? generate_qv_circuit(suite.num_qubits, rng)
                    : generate_random_circuit(suite.num_qubits, suite.n_gates, rng);
    p.placement = random_placement(spec, p.circuit.num_qubits, rng);
    out.push_back(std::move(p));
  }
  return out;
}

Interval mean_ci95(const std::vector<double>& xs) {
  Interval r;
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double half = 0.0;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  r.low = r.mean - half;
  r.high = r.mean + half;
  return r;
}

namespace {

Interval percentile_interval(std::vector<double> xs) {
  Interval r;
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  std::sort(xs.begin(), xs.end());
  auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(xs.size() - 1)));
    return xs[idx];
  };
  r.low = at(0.025);
  r.high = at(0.975);
  return r;
}

MethodSummary summarize(const std::string& method, int budget, const std::vector<BenchRow>& rows) {
  MethodSummary s;
  s.method = method;
  s.budget = budget;
  std::vector<double> durations, per_gate, gaps;
  for (const BenchRow& r : rows) {
    if (r.method != method || r.budget != budget) continue;
    ++s.instances;
    if (!r.solved) continue;
    ++s.solved;
    durations.push_back(r.duration);
    if (r.two_qubit_gates > 0) per_gate.push_back(r.duration / r.two_qubit_gates);
    if (const auto g = r.gap()) {
      gaps.push_back(*g);
      const double rounded = std::round(*g);
      const int bucket = rounded <= 0.0 ? 0 : rounded <= 1.0 ? 1 : rounded <= 2.0 ? 2 : 3;
      ++s.gap_histogram[bucket];
    }
  }
  s.duration = mean_ci95(durations);
  s.duration_per_gate = mean_ci95(per_gate);
  s.gap = mean_ci95(gaps);
  s.known_gaps = static_cast<int>(gaps.size());
  return s;
}

}  // namespace

BenchReport run_bench(const ChipSpec& spec, const BenchConfig& cfg, const Agent* agent) {
  for (const std::string& m : cfg.methods) {
    require(m == "heuristic" || m == "exact" || m == "rl", ErrorKind::InvalidInput,
            "unknown bench method: " + m);
    require(m != "rl" || agent != nullptr, ErrorKind::InvalidInput,
            "bench method rl needs a model");
  }
  require(cfg.bootstrap_draws >= 1, ErrorKind::InvalidInput, "bootstrap draws must be >= 1");
  std::vector<int> budgets = cfg.rollout_budgets;
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  require(!budgets.empty() && budgets.front() >= 1, ErrorKind::InvalidInput,
          "rollout budgets must be >= 1");

  const std::vector<Problem> suite = make_suite(spec, cfg.suite);
  auto has = [&](const char* m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  BenchReport report;
  std::vector<std::optional<double>> optimum(suite.size());
  if (has("exact")) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
      const OracleResult o = exact_compile(spec, suite[i], cfg.oracle);
      BenchRow row;
      row.instance = static_cast<int>(i);
      row.method = "exact";
      row.two_qubit_gates = static_cast<int>(suite[i].circuit.gates.size());
      row.actions = o.schedule.steps();
      row.duration = o.schedule.total_duration;
      row.compile_seconds = o.schedule.compile_seconds;
      row.proven_optimal = o.proven_optimal;
      if (o.proven_optimal) optimum[i] = o.schedule.total_duration;
      row.optimum = optimum[i];
      report.rows.push_back(row);
    }
  }
  if (has("heuristic")) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
      const Schedule h = heuristic_compile(spec, suite[i]);
      BenchRow row;
      row.instance = static_cast<int>(i);
      row.method = "heuristic";
      row.two_qubit_gates = static_cast<int>(suite[i].circuit.gates.size());
      row.actions = h.steps();
      row.duration = h.total_duration;
      row.compile_seconds = h.compile_seconds;
      row.optimum = optimum[i];
      report.rows.push_back(row);
    }
  }
  if (has("rl")) {
    InferenceConfig icfg = cfg.inference;
    icfg.max_rollouts = budgets.back();
    for (std::size_t i = 0; i < suite.size(); ++i) {
      icfg.seed = cfg.inference.seed + i;
      InferenceResult res;
      bool ok = true;
      try {
        res = rl_compile_detailed(*agent, spec, suite[i], icfg);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::BudgetExhausted) throw;
        ok = false;
      }
      report.rollouts.push_back(res.rollouts);
      for (int b : budgets) {
        BenchRow row;
        row.instance = static_cast<int>(i);
        row.method = "rl";
        row.budget = b;
        row.two_qubit_gates = static_cast<int>(suite[i].circuit.gates.size());
        row.optimum = optimum[i];
        row.solved = false;
        double best = std::numeric_limits<double>::infinity();
        int best_steps = 0;
        double finished = 0.0;
        for (const RolloutRecord& r : res.rollouts) {
          if (r.index >= b) continue;
          finished = std::max(finished, r.finished_at_seconds);
          if (r.completed && r.total_duration < best) {
            best = r.total_duration;
            best_steps = r.steps;
          }
        }
        if (ok && std::isfinite(best)) {
          row.solved = true;
          row.duration = best;
          row.actions = best_steps;
        }
        row.compile_seconds = finished;
        report.rows.push_back(row);
      }
    }

    // Bootstrap: every draw resamples b rollouts per instance with
    // replacement and averages the best durations (and gaps) over instances.
    Rng rng(cfg.seed);
    for (int b : budgets) {
      std::vector<double> dur_draws;
      std::vector<double> gap_draws;
      for (int d = 0; d < cfg.bootstrap_draws; ++d) {
        double dur_sum = 0.0, gap_sum = 0.0;
        int dur_n = 0, gap_n = 0;
        for (std::size_t i = 0; i < suite.size(); ++i) {
          const auto& pool = report.rollouts[i];
          if (pool.empty()) continue;
          std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
          double best = std::numeric_limits<double>::infinity();
          for (int k = 0; k < b; ++k) {
            const RolloutRecord& r = pool[pick(rng)];
            if (r.completed) best = std::min(best, r.total_duration);
          }
          if (!std::isfinite(best)) continue;
          dur_sum += best;
          ++dur_n;
          if (optimum[i]) {
            gap_sum += best - *optimum[i];
            ++gap_n;
          }
        }
        if (dur_n > 0) dur_draws.push_back(dur_sum / dur_n);
        if (gap_n > 0) gap_draws.push_back(gap_sum / gap_n);
      }
      BudgetPoint p;
      p.rollouts = b;
      p.duration = percentile_interval(dur_draws);
      if (!gap_draws.empty()) p.gap = percentile_interval(gap_draws);
      report.budget_curve.push_back(p);
    }
  }

  std::vector<std::pair<std::string, int>> keys;
  for (const BenchRow& r : report.rows) {
    const std::pair<std::string, int> k{r.method, r.budget};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  for (const auto& [m, b] : keys) report.summaries.push_back(summarize(m, b, report.rows));
  return report;
}

std::string report_csv(const BenchReport& report) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "instance,method,budget,two_qubit_gates,solved,actions,duration,duration_per_gate,"
         "optimum,gap,proven_optimal\n";
  for (const BenchRow& r : report.rows) {
    out << r.instance << ',' << r.method << ',' << r.budget << ',' << r.two_qubit_gates << ','
        << (r.solved ? 1 : 0) << ',' << r.actions << ',';
    if (r.solved) {
      out << r.duration << ',';
      if (r.two_qubit_gates > 0) out << r.duration / r.two_qubit_gates;
    } else {
      out << ',';
    }
    out << ',';
    if (r.optimum) out << *r.optimum;
    out << ',';
    if (const auto g = r.gap()) out << *g;
    out << ',' << (r.proven_optimal ? 1 : 0) << '\n';
  }
  return out.str();
}

namespace {

Json interval_json(const Interval& i) {
  return {{"mean", i.mean}, {"ci95", {i.low, i.high}}};
}

}  // namespace

Json report_json(const BenchReport& report) {
  Json rows = Json::array();
  for (const BenchRow& r : report.rows) {
    Json j = {{"instance", r.instance},
              {"method", r.method},
              {"budget", r.budget},
              {"two_qubit_gates", r.two_qubit_gates},
              {"solved", r.solved},
              {"actions", r.actions},
              {"duration", r.duration},
              {"compile_seconds", r.compile_seconds},
              {"proven_optimal", r.proven_optimal}};
    j["optimum"] = r.optimum ? Json(*r.optimum) : Json(nullptr);
    j["gap"] = r.gap() ? Json(*r.gap()) : Json(nullptr);
    rows.push_back(j);
  }
  Json summaries = Json::array();
  for (const MethodSummary& s : report.summaries) {
    summaries.push_back({{"method", s.method},
                         {"budget", s.budget},
                         {"instances", s.instances},
                         {"solved", s.solved},
                         {"duration", interval_json(s.duration)},
                         {"duration_per_two_qubit_gate", interval_json(s.duration_per_gate)},
                         {"gap", interval_json(s.gap)},
                         {"known_gaps", s.known_gaps},
                         {"gap_histogram",
                          {{"0", s.gap_histogram[0]},
                           {"1", s.gap_histogram[1]},
                           {"2", s.gap_histogram[2]},
                           {">2", s.gap_histogram[3]}}}});
  }
  Json curve = Json::array();
  for (const BudgetPoint& p : report.budget_curve) {
    Json j = {{"rollouts", p.rollouts}, {"duration", interval_json(p.duration)}};
    j["gap"] = p.gap ? interval_json(*p.gap) : Json(nullptr);
    curve.push_back(j);
  }
  Json rollouts = Json::array();
  for (const auto& per_instance : report.rollouts) {
    Json arr = Json::array();
    for (const RolloutRecord& r : per_instance) {
      arr.push_back({{"index", r.index},
                     {"completed", r.completed},
                     {"duration", r.total_duration},
                     {"steps", r.steps},
                     {"finished_at_seconds", r.finished_at_seconds}});
    }
    rollouts.push_back(arr);
  }
  return {{"rows", rows},
          {"summaries", summaries},
          {"budget_curve", curve},
          {"rollouts", rollouts}};
}

}  // namespace ionshuttle
