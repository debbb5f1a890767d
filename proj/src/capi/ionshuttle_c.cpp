#include "ionshuttle/ionshuttle.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "ionshuttle/animate.hpp"
#include "ionshuttle/bench.hpp"
#include "ionshuttle/error.hpp"
#include "ionshuttle/inference.hpp"
#include "ionshuttle/io.hpp"

using namespace ionshuttle;

struct is_chip {
  std::shared_ptr<const ChipSpec> spec;
};

struct is_problem {
  Problem problem;
};

struct is_model {
  Agent agent;
};

namespace {

thread_local std::string g_last_error;

is_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return IS_ERR_INVALID_INPUT;
    case ErrorKind::InvalidSpec: return IS_ERR_INVALID_SPEC;
    case ErrorKind::InvalidCircuit: return IS_ERR_INVALID_CIRCUIT;
    case ErrorKind::ContractViolation: return IS_ERR_CONTRACT;
    case ErrorKind::MaskedAction: return IS_ERR_MASKED_ACTION;
    case ErrorKind::DependencyViolation: return IS_ERR_DEPENDENCY;
    case ErrorKind::Capacity: return IS_ERR_CAPACITY;
    case ErrorKind::Numeric: return IS_ERR_NUMERIC;
    case ErrorKind::BudgetExhausted: return IS_ERR_BUDGET_EXHAUSTED;
    case ErrorKind::Io: return IS_ERR_IO;
  }
  return IS_ERR_INTERNAL;
}

template <typename F>
is_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return IS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const Json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return IS_ERR_INVALID_INPUT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IS_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::InvalidInput, std::string(what) + " must not be null");
}

Json parse_options(const char* json) {
  if (json == nullptr || *json == '\0') return Json::object();
  Json doc = Json::parse(json);
  require(doc.is_object(), ErrorKind::InvalidInput, "options must be a JSON object");
  return doc;
}

void check_problem(const ChipSpec& spec, const Problem& p) {
  require(p.placement.cells.size() == static_cast<std::size_t>(spec.n_cells),
          ErrorKind::InvalidInput,
          "placement has " + std::to_string(p.placement.cells.size()) + " cells, chip has " +
              std::to_string(spec.n_cells));
  validate_state(spec, p.placement);
  for (Qubit q = 1; q <= p.circuit.num_qubits; ++q) {
    require(cell_of_qubit(p.placement, q) >= 0, ErrorKind::InvalidInput,
            "qubit " + std::to_string(q) + " is not placed on the chip");
  }
}

InferenceConfig inference_from(const Json& o) {
  InferenceConfig c;
  c.time_budget_seconds = o.value("time_budget_seconds", c.time_budget_seconds);
  c.max_rollouts = o.value("max_rollouts", c.max_rollouts);
  c.step_cap = o.value("step_cap", c.step_cap);
  c.seed = o.value("seed", c.seed);
  c.greedy = o.value("greedy", c.greedy);
  return c;
}

}  // namespace

extern "C" {

const char* is_last_error(void) { return g_last_error.c_str(); }

const char* is_status_name(is_status s) {
  switch (s) {
    case IS_OK: return "ok";
    case IS_ERR_INVALID_INPUT: return "invalid input";
    case IS_ERR_INVALID_SPEC: return "invalid chip description";
    case IS_ERR_INVALID_CIRCUIT: return "invalid circuit";
    case IS_ERR_CONTRACT: return "contract violation";
    case IS_ERR_MASKED_ACTION: return "masked action";
    case IS_ERR_DEPENDENCY: return "dependency violation";
    case IS_ERR_CAPACITY: return "capacity exceeded";
    case IS_ERR_NUMERIC: return "numeric error";
    case IS_ERR_BUDGET_EXHAUSTED: return "budget exhausted";
    case IS_ERR_IO: return "i/o error";
    case IS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void is_string_free(char* s) { std::free(s); }

is_status is_chip_load(const char* chip, is_chip** out) {
  return guarded([&] {
    need(chip, "chip");
    need(out, "out");
    *out = new is_chip{std::make_shared<const ChipSpec>(load_chip(chip))};
  });
}

void is_chip_free(is_chip* chip) { delete chip; }

is_status is_chip_to_json(const is_chip* chip, char** out) {
  return guarded([&] {
    need(chip, "chip");
    need(out, "out");
    *out = dup(chip_to_json(*chip->spec).dump(2));
  });
}

int is_chip_num_cells(const is_chip* chip) { return chip ? chip->spec->n_cells : 0; }
int is_chip_num_actions(const is_chip* chip) { return chip ? chip->spec->num_actions() : 0; }
int is_chip_max_qubits(const is_chip* chip) { return chip ? chip->spec->n_max : 0; }

is_status is_problem_load(const is_chip* chip, const char* path, uint64_t seed, is_problem** out) {
  return guarded([&] {
    need(chip, "chip");
    need(path, "path");
    need(out, "out");
    const std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    Problem p;
    if (first != std::string::npos && text[first] == '{') {
      p = problem_from_json(Json::parse(text));
    } else {
      p.circuit = parse_circuit(text);
      Rng rng(seed);
      p.placement = random_placement(*chip->spec, p.circuit.num_qubits, rng);
    }
    check_problem(*chip->spec, p);
    *out = new is_problem{std::move(p)};
  });
}

is_status is_problem_from_json(const is_chip* chip, const char* json, is_problem** out) {
  return guarded([&] {
    need(chip, "chip");
    need(json, "json");
    need(out, "out");
    Problem p = problem_from_json(Json::parse(json));
    check_problem(*chip->spec, p);
    *out = new is_problem{std::move(p)};
  });
}

void is_problem_free(is_problem* problem) { delete problem; }

is_status is_problem_to_json(const is_problem* problem, char** out) {
  return guarded([&] {
    need(problem, "problem");
    need(out, "out");
    *out = dup(problem_to_json(problem->problem).dump());
  });
}

is_status is_problem_circuit_text(const is_problem* problem, char** out) {
  return guarded([&] {
    need(problem, "problem");
    need(out, "out");
    *out = dup(format_circuit(problem->problem.circuit));
  });
}

is_status is_gen_random(const is_chip* chip, int num_qubits, int n_gates, uint64_t seed,
                        is_problem** out) {
  return guarded([&] {
    need(chip, "chip");
    need(out, "out");
    require(num_qubits >= 2 && num_qubits <= chip->spec->n_max, ErrorKind::InvalidInput,
            "qubit count must lie in [2, " + std::to_string(chip->spec->n_max) + "]");
    require(n_gates >= 0, ErrorKind::InvalidInput, "gate count must be non-negative");
    Rng rng(seed);
    Problem p;
    p.circuit = generate_random_circuit(num_qubits, n_gates, rng);
    p.placement = random_placement(*chip->spec, num_qubits, rng);
    *out = new is_problem{std::move(p)};
  });
}

is_status is_gen_qv(int n, uint64_t seed, char** out) {
  return guarded([&] {
    need(out, "out");
    Rng rng(seed);
    *out = dup(format_circuit(generate_qv_circuit(n, rng)));
  });
}

is_status is_compile_heuristic(const is_chip* chip, const is_problem* problem,
                               char** schedule_json) {
  return guarded([&] {
    need(chip, "chip");
    need(problem, "problem");
    need(schedule_json, "out");
    const Schedule s = heuristic_compile(*chip->spec, problem->problem);
    *schedule_json = dup(schedule_to_json(*chip->spec, s).dump(2));
  });
}

is_status is_compile_exact(const is_chip* chip, const is_problem* problem,
                           const char* options_json, char** result_json) {
  return guarded([&] {
    need(chip, "chip");
    need(problem, "problem");
    need(result_json, "out");
    const Json o = parse_options(options_json);
    OracleBudget b;
    b.max_expanded = o.value("max_expanded", b.max_expanded);
    b.time_limit_seconds = o.value("time_limit_seconds", b.time_limit_seconds);
    b.canonicalize = o.value("canonicalize", b.canonicalize);
    const OracleResult r = exact_compile(*chip->spec, problem->problem, b);
    const Json doc = {{"schedule", schedule_to_json(*chip->spec, r.schedule)},
                      {"proven_optimal", r.proven_optimal},
                      {"expanded_states", r.expanded_states}};
    *result_json = dup(doc.dump(2));
  });
}

is_status is_compile_rl(const is_model* model, const is_chip* chip, const is_problem* problem,
                        const char* options_json, char** schedule_json) {
  return guarded([&] {
    need(model, "model");
    need(chip, "chip");
    need(problem, "problem");
    need(schedule_json, "out");
    const Json o = parse_options(options_json);
    InferenceConfig cfg = inference_from(o);
    if (o.value("budget_from_heuristic", false)) {
      const Schedule h = heuristic_compile(*chip->spec, problem->problem);
      cfg.time_budget_seconds = std::max(h.compile_seconds, 1.0);
    }
    const Schedule s = rl_compile(model->agent, *chip->spec, problem->problem, cfg);
    *schedule_json = dup(schedule_to_json(*chip->spec, s).dump(2));
  });
}

is_status is_verify_schedule(const is_chip* chip, const is_problem* problem,
                             const char* schedule_json, int* valid, char** why) {
  return guarded([&] {
    need(chip, "chip");
    need(problem, "problem");
    need(schedule_json, "schedule");
    need(valid, "valid");
    const Schedule s = schedule_from_json(Json::parse(schedule_json));
    std::string reason;
    *valid = verify_schedule(*chip->spec, problem->problem, s, &reason) ? 1 : 0;
    if (why) *why = dup(reason);
  });
}

is_status is_train(const is_chip* chip, const char* chip_name, const char* config_json,
                   const char* checkpoint_path, is_metrics_fn on_metrics, void* user,
                   is_model** out) {
  return guarded([&] {
    need(chip, "chip");
    need(out, "out");
    const TrainConfig cfg = train_config_from_json(parse_options(config_json));
    TrainHooks hooks;
    if (on_metrics) {
      hooks.on_metrics = [&](const TrainMetrics& m) {
        on_metrics(metrics_to_json(m).dump().c_str(), user);
      };
    }
    const std::string path = checkpoint_path ? checkpoint_path : "";
    if (!path.empty()) {
      hooks.on_checkpoint = [&](const Agent& a) { save_agent(path, a); };
    }
    Agent agent = train(*chip->spec, chip_name ? chip_name : "", cfg, hooks);
    *out = new is_model{std::move(agent)};
  });
}

is_status is_model_load(const char* path, is_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new is_model{load_agent(path)};
  });
}

is_status is_model_save(const is_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    save_agent(path, model->agent);
  });
}

void is_model_free(is_model* model) { delete model; }

is_status is_bench(const is_chip* chip, const is_model* model, const char* bench_json, char** csv,
                   char** report_out) {
  return guarded([&] {
    need(chip, "chip");
    const Json o = parse_options(bench_json);
    BenchConfig cfg;
    if (o.contains("suite")) {
      const Json& s = o.at("suite");
      const std::string kind = s.value("kind", std::string("random"));
      require(kind == "random" || kind == "qv", ErrorKind::InvalidInput,
              "suite kind must be random or qv");
      cfg.suite.kind = kind == "qv" ? SuiteKind::QuantumVolume : SuiteKind::Random;
      cfg.suite.instances = s.value("instances", cfg.suite.instances);
      cfg.suite.num_qubits = s.value("num_qubits", cfg.suite.num_qubits);
      cfg.suite.n_gates = s.value("n_gates", cfg.suite.n_gates);
      cfg.suite.seed = s.value("seed", cfg.suite.seed);
    }
    cfg.methods = o.value("methods", cfg.methods);
    cfg.rollout_budgets = o.value("rollout_budgets", cfg.rollout_budgets);
    cfg.bootstrap_draws = o.value("bootstrap_draws", cfg.bootstrap_draws);
    cfg.seed = o.value("seed", cfg.seed);
    cfg.oracle.max_expanded = o.value("oracle_max_expanded", cfg.oracle.max_expanded);
    if (o.contains("inference")) cfg.inference = inference_from(o.at("inference"));
    const BenchReport report = run_bench(*chip->spec, cfg, model ? &model->agent : nullptr);
    if (csv) *csv = dup(report_csv(report));
    if (report_out) *report_out = dup(ionshuttle::report_json(report).dump(2));
  });
}

is_status is_animate(const is_chip* chip, const is_problem* problem, const char* schedule_json,
                     const char* format, char** out) {
  return guarded([&] {
    need(chip, "chip");
    need(problem, "problem");
    need(schedule_json, "schedule");
    need(out, "out");
    const Schedule s = schedule_from_json(Json::parse(schedule_json));
    const std::string f = format ? format : "json";
    if (f == "text") {
      *out = dup(animate_text(*chip->spec, problem->problem, s));
    } else {
      require(f == "json", ErrorKind::InvalidInput, "animate format must be json or text");
      *out = dup(animate_frames(*chip->spec, problem->problem, s).dump());
    }
  });
}

}  // extern "C"
