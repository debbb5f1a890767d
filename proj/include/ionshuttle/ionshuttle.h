/* C interface to the ion shuttling compiler.
 *
 * Objects are opaque handles released with the matching *_free call.
 * Every function returns an is_status; on failure is_last_error() holds a
 * message for the calling thread. Strings returned through char** are owned
 * by the caller and released with is_string_free.
 */
#ifndef IONSHUTTLE_H
#define IONSHUTTLE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define IS_API __attribute__((visibility("default")))
#else
#define IS_API
#endif

typedef enum is_status {
  IS_OK = 0,
  IS_ERR_INVALID_INPUT = 1,
  IS_ERR_INVALID_SPEC = 2,
  IS_ERR_INVALID_CIRCUIT = 3,
  IS_ERR_CONTRACT = 4,
  IS_ERR_MASKED_ACTION = 5,
  IS_ERR_DEPENDENCY = 6,
  IS_ERR_CAPACITY = 7,
  IS_ERR_NUMERIC = 8,
  IS_ERR_BUDGET_EXHAUSTED = 9,
  IS_ERR_IO = 10,
  IS_ERR_INTERNAL = 11
} is_status;

typedef struct is_chip is_chip;
typedef struct is_problem is_problem;
typedef struct is_model is_model;

/* Called once per training iteration with a JSON metrics line. */
typedef void (*is_metrics_fn)(const char* metrics_json, void* user);

IS_API const char* is_last_error(void);
IS_API const char* is_status_name(is_status status);
IS_API void is_string_free(char* s);

/* chip: "builtin:<name>" or a chip JSON file. */
IS_API is_status is_chip_load(const char* chip, is_chip** out);
IS_API void is_chip_free(is_chip* chip);
IS_API is_status is_chip_to_json(const is_chip* chip, char** out);
IS_API int is_chip_num_cells(const is_chip* chip);
IS_API int is_chip_num_actions(const is_chip* chip);
IS_API int is_chip_max_qubits(const is_chip* chip);

/* Problem = circuit + initial placement.
 * From a file: problem JSON, or circuit text with a random placement drawn
 * from `seed`. */
IS_API is_status is_problem_load(const is_chip* chip, const char* path, uint64_t seed,
                                 is_problem** out);
IS_API is_status is_problem_from_json(const is_chip* chip, const char* json, is_problem** out);
IS_API void is_problem_free(is_problem* problem);
IS_API is_status is_problem_to_json(const is_problem* problem, char** out);
IS_API is_status is_problem_circuit_text(const is_problem* problem, char** out);

IS_API is_status is_gen_random(const is_chip* chip, int num_qubits, int n_gates, uint64_t seed,
                               is_problem** out);
/* Quantum volume circuit text with n qubits. */
IS_API is_status is_gen_qv(int n, uint64_t seed, char** out);

/* Schedules are returned as JSON. */
IS_API is_status is_compile_heuristic(const is_chip* chip, const is_problem* problem,
                                      char** schedule_json);
/* options_json: {"max_expanded", "time_limit_seconds", "canonicalize"}; may be NULL.
 * Result: {"schedule", "proven_optimal", "expanded_states"}. */
IS_API is_status is_compile_exact(const is_chip* chip, const is_problem* problem,
                                  const char* options_json, char** result_json);
/* options_json: {"time_budget_seconds", "max_rollouts", "step_cap", "seed", "greedy",
 * "budget_from_heuristic"}; may be NULL. */
IS_API is_status is_compile_rl(const is_model* model, const is_chip* chip,
                               const is_problem* problem, const char* options_json,
                               char** schedule_json);
/* Returns 1 when the schedule replays exactly and finishes the circuit. */
IS_API is_status is_verify_schedule(const is_chip* chip, const is_problem* problem,
                                    const char* schedule_json, int* valid, char** why);

/* config_json: training config (missing keys take defaults); may be NULL.
 * checkpoint_path, when not NULL, receives periodic checkpoints. */
IS_API is_status is_train(const is_chip* chip, const char* chip_name, const char* config_json,
                          const char* checkpoint_path, is_metrics_fn on_metrics, void* user,
                          is_model** out);
IS_API is_status is_model_load(const char* path, is_model** out);
IS_API is_status is_model_save(const is_model* model, const char* path);
IS_API void is_model_free(is_model* model);

/* bench_json: {"suite": {"kind", "instances", "num_qubits", "n_gates", "seed"},
 * "methods", "rollout_budgets", "bootstrap_draws", "seed", "oracle_max_expanded",
 * "inference": {...}}. model may be NULL unless "rl" is requested. */
IS_API is_status is_bench(const is_chip* chip, const is_model* model, const char* bench_json,
                          char** csv, char** report_json);

/* format: "json" or "text". */
IS_API is_status is_animate(const is_chip* chip, const is_problem* problem,
                            const char* schedule_json, const char* format, char** out);

#ifdef __cplusplus
}
#endif

#endif /* IONSHUTTLE_H */
