#include <cstring>
#include <string>

#include "doctest.h"
#include "ionshuttle/ionshuttle.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  is_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("chip handles and errors") {
  is_chip* chip = nullptr;
  REQUIRE(is_chip_load("builtin:x6", &chip) == IS_OK);
  CHECK(is_chip_num_cells(chip) == 9);
  CHECK(is_chip_num_actions(chip) == 12);
  CHECK(is_chip_max_qubits(chip) == 6);
  char* json = nullptr;
  CHECK(is_chip_to_json(chip, &json) == IS_OK);
  CHECK(take(json).find("\"family\"") != std::string::npos);

  is_chip* bad = nullptr;
  CHECK(is_chip_load("builtin:zz", &bad) == IS_ERR_INVALID_SPEC);
  CHECK(bad == nullptr);
  CHECK(std::strlen(is_last_error()) > 0);
  CHECK(std::string(is_status_name(IS_ERR_BUDGET_EXHAUSTED)) == "budget exhausted");
  CHECK(is_chip_load(nullptr, &bad) == IS_ERR_INVALID_INPUT);
  is_chip_free(chip);
}

TEST_CASE("compile and verify through the C interface") {
  is_chip* chip = nullptr;
  REQUIRE(is_chip_load("builtin:x6", &chip) == IS_OK);
  is_problem* prob = nullptr;
  REQUIRE(is_gen_random(chip, 4, 6, 11, &prob) == IS_OK);

  char* schedule = nullptr;
  REQUIRE(is_compile_heuristic(chip, prob, &schedule) == IS_OK);
  const std::string s = take(schedule);
  int valid = 0;
  char* why = nullptr;
  CHECK(is_verify_schedule(chip, prob, s.c_str(), &valid, &why) == IS_OK);
  is_string_free(why);
  CHECK(valid == 1);

  char* exact = nullptr;
  REQUIRE(is_compile_exact(chip, prob, nullptr, &exact) == IS_OK);
  CHECK(take(exact).find("\"proven_optimal\": true") != std::string::npos);

  char* text = nullptr;
  CHECK(is_animate(chip, prob, s.c_str(), "text", &text) == IS_OK);
  CHECK(take(text).find("frame 0") != std::string::npos);
  CHECK(is_animate(chip, prob, s.c_str(), "svg", &text) == IS_ERR_INVALID_INPUT);

  CHECK(is_compile_exact(chip, prob, "{not json", &exact) == IS_ERR_INVALID_INPUT);
  CHECK(is_problem_from_json(chip, "{\"gates\": [[1, 9]], \"num_qubits\": 2, \"placement\": []}",
                             &prob) != IS_OK);
  is_problem_free(prob);
  is_chip_free(chip);
}

TEST_CASE("train, save, load and compile") {
  is_chip* chip = nullptr;
  REQUIRE(is_chip_load("builtin:x4", &chip) == IS_OK);
  const char* cfg =
      "{\"n_envs\":2,\"n_steps\":8,\"minibatch_size\":8,\"n_hidden\":8,\"n_blocks\":1,"
      "\"n_gates\":4,\"gamma\":0.99,\"learning_steps\":2,\"seed\":1}";
  int calls = 0;
  is_model* model = nullptr;
  REQUIRE(is_train(chip, "x4", cfg, nullptr,
                   [](const char* line, void* user) {
                     ++*static_cast<int*>(user);
                     CHECK(std::string(line).find("learning_steps") != std::string::npos);
                   },
                   &calls, &model) == IS_OK);
  CHECK(calls > 0);
  is_problem* prob = nullptr;
  REQUIRE(is_gen_random(chip, 3, 3, 2, &prob) == IS_OK);
  char* out = nullptr;
  const is_status st = is_compile_rl(model, chip, prob, "{\"max_rollouts\": 4}", &out);
  CHECK((st == IS_OK || st == IS_ERR_BUDGET_EXHAUSTED));
  is_string_free(out);

  is_chip* other = nullptr;
  REQUIRE(is_chip_load("builtin:x6", &other) == IS_OK);
  is_problem* p6 = nullptr;
  REQUIRE(is_gen_random(other, 3, 3, 2, &p6) == IS_OK);
  CHECK(is_compile_rl(model, other, p6, nullptr, &out) == IS_ERR_INVALID_INPUT);
  CHECK(is_train(chip, "x4", "{\"bogus\": 1}", nullptr, nullptr, nullptr, &model) ==
        IS_ERR_INVALID_INPUT);
  is_problem_free(p6);
  is_chip_free(other);
  is_problem_free(prob);
  is_model_free(model);
  is_chip_free(chip);
}
