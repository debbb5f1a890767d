// ionshuttle: command-line front end over the C interface.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ionshuttle/ionshuttle.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitBudget = 3;

struct CliError {
  is_status status;
  std::string message;
};

int exit_code(is_status s) {
  switch (s) {
    case IS_OK: return kExitOk;
    case IS_ERR_BUDGET_EXHAUSTED: return kExitBudget;
    case IS_ERR_NUMERIC:
    case IS_ERR_INTERNAL: return kExitFailure;
    default: return kExitInvalid;
  }
}

void check(is_status s) {
  if (s != IS_OK) throw CliError{s, is_last_error()};
}

struct Str {
  char* p = nullptr;
  ~Str() { is_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() {
    if (p) Free(p);
  }
};
using Chip = Handle<is_chip, is_chip_free>;
using Prob = Handle<is_problem, is_problem_free>;
using Model = Handle<is_model, is_model_free>;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{IS_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw CliError{IS_ERR_IO, "cannot write " + out};
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

struct Globals {
  std::string chip = "builtin:x6";
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

void load_chip(const Globals& g, Chip& chip) { check(is_chip_load(g.chip.c_str(), &chip.p)); }

void load_problem(const Globals& g, const Chip& chip, const std::string& path, Prob& prob) {
  check(is_problem_load(chip.p, path.c_str(), g.seed, &prob.p));
}

void metrics_to_stderr(const char* line, void*) { std::cerr << line << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ion shuttling compiler for trapped-ion QCCD chips"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--chip", g.chip, "builtin:<name> or chip JSON file")->capture_default_str();
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--config", g.config, "JSON config file for the command");
  app.add_option("--out", g.out, "output file (default stdout)");
  app.fallthrough();

  // train
  auto* train = app.add_subcommand("train", "train a policy with PPO");
  long long steps_override = -1;
  double time_limit = -1.0;
  train->add_option("--steps", steps_override, "learning steps (overrides config)");
  train->add_option("--time-limit", time_limit, "wall-clock limit in seconds");

  // compile
  auto* compile = app.add_subcommand("compile", "compile a circuit to a shuttling schedule");
  std::string circuit_path, method = "heuristic", model_path;
  int rollouts = 64;
  double budget = 0.0;
  bool budget_from_heuristic = false, greedy = false;
  compile->add_option("--circuit", circuit_path, "circuit text or problem JSON")->required();
  compile->add_option("--method", method, "rl, heuristic or exact")
      ->check(CLI::IsMember({"rl", "heuristic", "exact"}))
      ->capture_default_str();
  compile->add_option("--model", model_path, "checkpoint for --method rl");
  compile->add_option("--rollouts", rollouts, "maximum rollouts (rl)")->capture_default_str();
  compile->add_option("--budget", budget, "time budget in seconds (rl, 0 = none)");
  compile->add_flag("--budget-from-heuristic", budget_from_heuristic,
                    "budget = max(heuristic compile time, 1 s)");
  compile->add_flag("--greedy", greedy, "argmax actions instead of sampling");

  // bench
  auto* bench = app.add_subcommand("bench", "benchmark compilers on a generated suite");
  std::string bench_model;
  bench->add_option("--model", bench_model, "checkpoint; enables the rl method");

  // gen-qv
  auto* gen_qv = app.add_subcommand("gen-qv", "generate a quantum volume circuit");
  int qv_n = 6;
  gen_qv->add_option("--n", qv_n, "qubits")->capture_default_str();

  // gen-random
  auto* gen_random = app.add_subcommand("gen-random", "generate a random problem (JSON)");
  int rand_qubits = 4, rand_gates = 6;
  bool circuit_only = false;
  gen_random->add_option("--qubits", rand_qubits, "qubits")->capture_default_str();
  gen_random->add_option("--gates", rand_gates, "two-qubit gates")->capture_default_str();
  gen_random->add_flag("--circuit-only", circuit_only, "write circuit text without placement");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact shortest schedule by uniform-cost search");
  std::string oracle_circuit;
  long long max_expanded = 20'000'000;
  double oracle_time = 600.0;
  bool no_canon = false;
  oracle->add_option("--circuit", oracle_circuit, "circuit text or problem JSON")->required();
  oracle->add_option("--max-expanded", max_expanded, "state expansion budget")
      ->capture_default_str();
  oracle->add_option("--time-limit", oracle_time, "seconds")->capture_default_str();
  oracle->add_flag("--no-canonicalize", no_canon, "disable relabeling symmetry reduction");

  // animate
  auto* animate = app.add_subcommand("animate", "dump per-step cell occupancy frames");
  std::string anim_circuit, anim_schedule, anim_format = "text";
  animate->add_option("--circuit", anim_circuit, "problem JSON (or circuit text with --seed)")
      ->required();
  animate->add_option("--schedule", anim_schedule, "schedule JSON")->required();
  animate->add_option("--format", anim_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    Chip chip;
    load_chip(g, chip);

    if (*train) {
      std::string cfg = g.config.empty() ? "{}" : slurp(g.config);
      // Command-line overrides are merged as JSON so the library validates them.
      std::string extra;
      auto add = [&](const std::string& kv) { extra += (extra.empty() ? "" : ",") + kv; };
      if (app.get_option("--seed")->count() > 0) add("\"seed\":" + std::to_string(g.seed));
      if (steps_override >= 0) add("\"learning_steps\":" + std::to_string(steps_override));
      if (time_limit >= 0.0) add("\"time_limit_seconds\":" + std::to_string(time_limit));
      // Appended last so they win over keys already in the file.
      const auto brace = cfg.rfind('}');
      if (brace == std::string::npos) {
        throw CliError{IS_ERR_INVALID_INPUT, "config is not a JSON object"};
      }
      const auto prev = cfg.find_last_not_of(" \t\r\n", brace == 0 ? 0 : brace - 1);
      const bool empty_obj = prev == std::string::npos || cfg[prev] == '{';
      if (!extra.empty()) cfg.insert(brace, (empty_obj ? "" : ",") + extra);
      if (g.out.empty()) throw CliError{IS_ERR_INVALID_INPUT, "train needs --out for the checkpoint"};
      Model model;
      check(is_train(chip.p, g.chip.c_str(), cfg.c_str(), g.out.c_str(), metrics_to_stderr,
                     nullptr, &model.p));
      check(is_model_save(model.p, g.out.c_str()));
      return kExitOk;
    }

    if (*compile) {
      Prob prob;
      load_problem(g, chip, circuit_path, prob);
      Str out;
      if (method == "heuristic") {
        check(is_compile_heuristic(chip.p, prob.p, &out.p));
      } else if (method == "exact") {
        std::string opts = g.config.empty() ? "" : slurp(g.config);
        check(is_compile_exact(chip.p, prob.p, opts.c_str(), &out.p));
      } else {
        if (model_path.empty()) throw CliError{IS_ERR_INVALID_INPUT, "--method rl needs --model"};
        Model model;
        check(is_model_load(model_path.c_str(), &model.p));
        std::ostringstream opts;
        opts << "{\"max_rollouts\":" << rollouts << ",\"time_budget_seconds\":" << budget
             << ",\"seed\":" << g.seed << ",\"greedy\":" << (greedy ? "true" : "false")
             << ",\"budget_from_heuristic\":" << (budget_from_heuristic ? "true" : "false")
             << "}";
        check(is_compile_rl(model.p, chip.p, prob.p, opts.str().c_str(), &out.p));
      }
      emit(g.out, out.str());
      return kExitOk;
    }

    if (*bench) {
      Model model;
      if (!bench_model.empty()) check(is_model_load(bench_model.c_str(), &model.p));
      const std::string cfg = g.config.empty() ? "" : slurp(g.config);
      Str csv, report;
      check(is_bench(chip.p, model.p, cfg.c_str(), &csv.p, &report.p));
      if (g.out.empty()) {
        emit("", csv.str());
      } else {
        emit(g.out + ".csv", csv.str());
        emit(g.out + ".json", report.str());
      }
      return kExitOk;
    }

    if (*gen_qv) {
      Str out;
      check(is_gen_qv(qv_n, g.seed, &out.p));
      emit(g.out, out.str());
      return kExitOk;
    }

    if (*gen_random) {
      Prob prob;
      check(is_gen_random(chip.p, rand_qubits, rand_gates, g.seed, &prob.p));
      Str out;
      if (circuit_only) check(is_problem_circuit_text(prob.p, &out.p));
      else check(is_problem_to_json(prob.p, &out.p));
      emit(g.out, out.str());
      return kExitOk;
    }

    if (*oracle) {
      Prob prob;
      load_problem(g, chip, oracle_circuit, prob);
      std::ostringstream opts;
      opts << "{\"max_expanded\":" << max_expanded << ",\"time_limit_seconds\":" << oracle_time
           << ",\"canonicalize\":" << (no_canon ? "false" : "true") << "}";
      Str out;
      check(is_compile_exact(chip.p, prob.p, opts.str().c_str(), &out.p));
      emit(g.out, out.str());
      return kExitOk;
    }

    if (*animate) {
      Prob prob;
      load_problem(g, chip, anim_circuit, prob);
      const std::string schedule = slurp(anim_schedule);
      Str out;
      check(is_animate(chip.p, prob.p, schedule.c_str(), anim_format.c_str(), &out.p));
      emit(g.out, out.str());
      return kExitOk;
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << is_status_name(e.status) << ": " << e.message << std::endl;
    return exit_code(e.status);
  }
  return kExitInvalid;
}
