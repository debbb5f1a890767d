#pragma once

#include "json.hpp"
#include <string>

#include "ionshuttle/baselines.hpp"
#include "ionshuttle/chip.hpp"
#include "ionshuttle/circuit.hpp"
#include "ionshuttle/ppo.hpp"

namespace ionshuttle {

using Json = nlohmann::json;

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// {family, zones:[{kind, capacity}], durations:{default, fast_rotation}}
Json chip_to_json(const ChipSpec& spec);
ChipSpec chip_from_json(const Json& doc);
// "builtin:<name>" or a path to a chip JSON file.
ChipSpec load_chip(const std::string& arg);

// {num_qubits, gates:[[x, y], ...], placement:[cell labels]}
Json problem_to_json(const Problem& problem);
Problem problem_from_json(const Json& doc);

Json schedule_to_json(const ChipSpec& spec, const Schedule& schedule);
Schedule schedule_from_json(const Json& doc);

// Missing keys keep their defaults; unknown keys are rejected.
Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& doc);

Json metrics_to_json(const TrainMetrics& m);

Json agent_to_json(const Agent& agent);
Agent agent_from_json(const Json& doc);
void save_agent(const std::string& path, const Agent& agent);
Agent load_agent(const std::string& path);

// Throws InvalidInput when the agent was trained for a differently shaped chip.
void check_compatible(const Agent& agent, const ChipSpec& spec);

}  // namespace ionshuttle
