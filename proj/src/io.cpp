#include "ionshuttle/io.hpp"

#include <fstream>
#include <sstream>

#include "ionshuttle/error.hpp"

namespace ionshuttle {

namespace {

constexpr const char* kCheckpointFormat = "ionshuttle-agent";
constexpr int kCheckpointVersion = 1;

ZoneKind zone_kind_from(const std::string& s) {
  if (s == "compute") return ZoneKind::Compute;
  if (s == "spam") return ZoneKind::Spam;
  if (s == "storage") return ZoneKind::Storage;
  if (s == "ring") return ZoneKind::Ring;
  fail(ErrorKind::InvalidSpec, "unknown zone kind: " + s);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <typename T>
T get(const Json& doc, const char* key, ErrorKind kind) {
  if (!doc.contains(key)) fail(kind, std::string("missing key: ") + key);
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(kind, std::string("bad value for ") + key + ": " + e.what());
  }
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out << contents;
    if (!out) fail(ErrorKind::Io, "write failed for " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) fail(ErrorKind::Io, "cannot replace " + path);
}

Json chip_to_json(const ChipSpec& spec) {
  Json zones = Json::array();
  for (const Zone& z : spec.zones) {
    zones.push_back({{"kind", lower(to_string(z.kind))}, {"capacity", z.capacity}});
  }
  return {{"family", spec.family == ChipFamily::X ? "x" : "q"},
          {"zones", zones},
          {"durations",
           {{"default", spec.default_duration}, {"fast_rotation", spec.fast_rotation_duration}}}};
}

ChipSpec chip_from_json(const Json& doc) {
  if (!doc.is_object()) fail(ErrorKind::InvalidSpec, "chip description must be a JSON object");
  const std::string family = lower(get<std::string>(doc, "family", ErrorKind::InvalidSpec));
  const Json zones = get<Json>(doc, "zones", ErrorKind::InvalidSpec);
  require(zones.is_array(), ErrorKind::InvalidSpec, "zones must be an array");
  std::vector<std::pair<ZoneKind, int>> z;
  for (const Json& entry : zones) {
    z.emplace_back(zone_kind_from(lower(get<std::string>(entry, "kind", ErrorKind::InvalidSpec))),
                   get<int>(entry, "capacity", ErrorKind::InvalidSpec));
  }
  double default_duration = 1.0;
  double fast = 1.0;
  if (doc.contains("durations")) {
    const Json& d = doc.at("durations");
    if (d.contains("default")) default_duration = get<double>(d, "default", ErrorKind::InvalidSpec);
    if (d.contains("fast_rotation")) fast = get<double>(d, "fast_rotation", ErrorKind::InvalidSpec);
  }
  require(default_duration > 0.0 && std::isfinite(default_duration), ErrorKind::InvalidSpec,
          "default duration must be positive");

  ChipSpec spec;
  if (family == "x") {
    require(z.size() == 4 && z[0] == std::pair{ZoneKind::Compute, 2} &&
                z[1] == std::pair{ZoneKind::Spam, 1} && z[2].first == ZoneKind::Storage &&
                z[3].first == ZoneKind::Storage && z[2].second == z[3].second,
            ErrorKind::InvalidSpec,
            "x-chip zones must be compute(2), spam(1), storage(c), storage(c)");
    spec = build_x_chip(z[2].second);
  } else if (family == "q") {
    require(z.size() == 3 && z[0] == std::pair{ZoneKind::Compute, 2} &&
                z[1].first == ZoneKind::Spam && z[2].first == ZoneKind::Ring,
            ErrorKind::InvalidSpec, "q-chip zones must be compute(2), spam(s), ring(r)");
    require(fast <= default_duration, ErrorKind::InvalidSpec,
            "fast rotation duration exceeds the default duration");
    spec = build_q_chip(z[2].second, z[1].second, fast / default_duration);
    spec.fast_rotation_duration = fast;
  } else {
    fail(ErrorKind::InvalidSpec, "unknown chip family: " + family);
  }
  spec.default_duration = default_duration;
  return spec;
}

ChipSpec load_chip(const std::string& arg) {
  constexpr std::string_view prefix = "builtin:";
  if (arg.starts_with(prefix)) return builtin_chip(std::string_view(arg).substr(prefix.size()));
  Json doc;
  try {
    doc = Json::parse(read_file(arg));
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidSpec, "chip file " + arg + " is not valid JSON: " + e.what());
  }
  return chip_from_json(doc);
}

Json problem_to_json(const Problem& problem) {
  Json gates = Json::array();
  for (const Gate& g : problem.circuit.gates) gates.push_back({g.x, g.y});
  return {{"num_qubits", problem.circuit.num_qubits},
          {"gates", gates},
          {"placement", problem.placement.cells}};
}

Problem problem_from_json(const Json& doc) {
  require(doc.is_object(), ErrorKind::InvalidInput, "problem must be a JSON object");
  Problem p;
  p.circuit.num_qubits = get<int>(doc, "num_qubits", ErrorKind::InvalidCircuit);
  for (const Json& g : get<Json>(doc, "gates", ErrorKind::InvalidCircuit)) {
    require(g.is_array() && g.size() == 2, ErrorKind::InvalidCircuit, "gate must be [x, y]");
    p.circuit.gates.push_back(Gate{g[0].get<Qubit>(), g[1].get<Qubit>()});
  }
  validate_circuit(p.circuit);
  p.placement.cells = get<std::vector<Qubit>>(doc, "placement", ErrorKind::InvalidInput);
  return p;
}

Json schedule_to_json(const ChipSpec& spec, const Schedule& schedule) {
  Json actions = Json::array();
  for (const ScheduleEntry& e : schedule.actions) {
    actions.push_back({{"action", e.action},
                       {"name", spec.actions.at(e.action).name},
                       {"duration", e.duration},
                       {"gates", e.gates}});
  }
  return {{"method", schedule.method},
          {"total_duration", schedule.total_duration},
          {"steps", schedule.steps()},
          {"compile_seconds", schedule.compile_seconds},
          {"actions", actions}};
}

Schedule schedule_from_json(const Json& doc) {
  Schedule s;
  s.method = doc.value("method", std::string());
  s.total_duration = get<double>(doc, "total_duration", ErrorKind::InvalidInput);
  s.compile_seconds = doc.value("compile_seconds", 0.0);
  for (const Json& a : get<Json>(doc, "actions", ErrorKind::InvalidInput)) {
    ScheduleEntry e;
    e.action = get<int>(a, "action", ErrorKind::InvalidInput);
    e.duration = get<double>(a, "duration", ErrorKind::InvalidInput);
    e.gates = a.value("gates", std::vector<int>());
    s.actions.push_back(std::move(e));
  }
  return s;
}

Json train_config_to_json(const TrainConfig& c) {
  return {
      {"learning_rate", c.learning_rate},
      {"linear_lr_decay", c.linear_lr_decay},
      {"value_coef", c.value_coef},
      {"clip_ratio", c.clip_ratio},
      {"n_envs", c.n_envs},
      {"n_steps", c.n_steps},
      {"entropy_coef", c.entropy_coef},
      {"epochs", c.epochs},
      {"minibatch_size", c.minibatch_size},
      {"gae_lambda", c.gae_lambda},
      {"gamma", c.gamma},
      {"gamma_s", c.gamma_s},
      {"gamma_s_equals_gamma", c.gamma_s_equals_gamma},
      {"shaping", c.shaping},
      {"penalty_rate", c.penalty_rate},
      {"n_gates", c.n_gates},
      {"n_blocks", c.n_blocks},
      {"n_hidden", c.n_hidden},
      {"learning_steps", c.learning_steps},
      {"k_lookahead", c.k_lookahead},
      {"b_cell", c.b_cell},
      {"b_total_gates", c.b_total_gates},
      {"encoding", c.encoding == NumericEncoding::Sinusoidal ? "sinusoidal" : "linear"},
      {"representation", c.representation == Representation::Proposed ? "proposed" : "naive"},
      {"normalize_advantages", c.normalize_advantages},
      {"max_grad_norm", c.max_grad_norm},
      {"truncation_floor", c.truncation_floor},
      {"truncation_multiplier", c.truncation_multiplier},
      {"time_limit_seconds", c.time_limit_seconds},
      {"seed", c.seed},
  };
}

TrainConfig train_config_from_json(const Json& doc) {
  require(doc.is_object(), ErrorKind::InvalidInput, "training config must be a JSON object");
  TrainConfig c;
  const Json known = train_config_to_json(c);
  for (const auto& [key, value] : doc.items()) {
    if (key.starts_with("_")) continue;  // comments
    require(known.contains(key), ErrorKind::InvalidInput, "unknown training config key: " + key);
  }
  auto set = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = get<std::decay_t<decltype(field)>>(doc, key, ErrorKind::InvalidInput);
  };
  set("learning_rate", c.learning_rate);
  set("linear_lr_decay", c.linear_lr_decay);
  set("value_coef", c.value_coef);
  set("clip_ratio", c.clip_ratio);
  set("n_envs", c.n_envs);
  set("n_steps", c.n_steps);
  set("entropy_coef", c.entropy_coef);
  set("epochs", c.epochs);
  set("minibatch_size", c.minibatch_size);
  set("gae_lambda", c.gae_lambda);
  set("gamma", c.gamma);
  set("gamma_s", c.gamma_s);
  set("gamma_s_equals_gamma", c.gamma_s_equals_gamma);
  set("shaping", c.shaping);
  set("penalty_rate", c.penalty_rate);
  set("n_gates", c.n_gates);
  set("n_blocks", c.n_blocks);
  set("n_hidden", c.n_hidden);
  set("learning_steps", c.learning_steps);
  set("k_lookahead", c.k_lookahead);
  set("b_cell", c.b_cell);
  set("b_total_gates", c.b_total_gates);
  set("normalize_advantages", c.normalize_advantages);
  set("max_grad_norm", c.max_grad_norm);
  set("truncation_floor", c.truncation_floor);
  set("truncation_multiplier", c.truncation_multiplier);
  set("time_limit_seconds", c.time_limit_seconds);
  set("seed", c.seed);
  if (doc.contains("encoding")) {
    const std::string e = lower(get<std::string>(doc, "encoding", ErrorKind::InvalidInput));
    if (e == "sinusoidal") c.encoding = NumericEncoding::Sinusoidal;
    else if (e == "linear") c.encoding = NumericEncoding::Linear;
    else fail(ErrorKind::InvalidInput, "encoding must be sinusoidal or linear");
  }
  if (doc.contains("representation")) {
    const std::string r = lower(get<std::string>(doc, "representation", ErrorKind::InvalidInput));
    if (r == "proposed") c.representation = Representation::Proposed;
    else if (r == "naive") c.representation = Representation::Naive;
    else fail(ErrorKind::InvalidInput, "representation must be proposed or naive");
  }
  validate(c);
  return c;
}

Json metrics_to_json(const TrainMetrics& m) {
  return {{"iteration", m.iteration},
          {"learning_steps", m.learning_steps},
          {"env_steps", m.env_steps},
          {"learning_rate", m.learning_rate},
          {"episodes", m.episodes},
          {"mean_episode_duration", m.mean_episode_duration},
          {"solve_rate", m.solve_rate},
          {"entropy", m.entropy},
          {"value_loss", m.value_loss},
          {"policy_loss", m.policy_loss},
          {"approx_kl", m.approx_kl},
          {"clip_fraction", m.clip_fraction},
          {"elapsed_seconds", m.elapsed_seconds}};
}

namespace {

Json net_to_json(const nn::ResidualNet<float>& net) {
  const nn::NetShape& s = net.shape();
  std::vector<double> params(net.params().begin(), net.params().end());
  return {{"shape",
           {{"input", s.input}, {"hidden", s.hidden}, {"blocks", s.blocks}, {"output", s.output}}},
          {"params", params}};
}

nn::ResidualNet<float> net_from_json(const Json& doc) {
  const Json& s = doc.at("shape");
  nn::ResidualNet<float> net(nn::NetShape{s.at("input").get<int>(), s.at("hidden").get<int>(),
                                          s.at("blocks").get<int>(), s.at("output").get<int>()});
  const std::vector<double> params = doc.at("params").get<std::vector<double>>();
  require(params.size() == net.size(), ErrorKind::InvalidInput,
          "checkpoint parameter count does not match its shape");
  for (std::size_t i = 0; i < params.size(); ++i) net.params()[i] = static_cast<float>(params[i]);
  return net;
}

}  // namespace

Json agent_to_json(const Agent& agent) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"chip", agent.chip},
          {"n_cells", agent.n_cells},
          {"n_actions", agent.n_actions},
          {"step", agent.learning_steps_done},
          {"config", train_config_to_json(agent.config)},
          {"policy", net_to_json(agent.policy)},
          {"value", net_to_json(agent.value)}};
}

Agent agent_from_json(const Json& doc) {
  require(doc.is_object() && doc.value("format", std::string()) == kCheckpointFormat,
          ErrorKind::InvalidInput, "not an agent checkpoint");
  require(doc.value("version", 0) == kCheckpointVersion, ErrorKind::InvalidInput,
          "unsupported checkpoint version");
  try {
    Agent a;
    a.chip = doc.at("chip").get<std::string>();
    a.n_cells = doc.at("n_cells").get<int>();
    a.n_actions = doc.at("n_actions").get<int>();
    a.learning_steps_done = doc.at("step").get<std::int64_t>();
    a.config = train_config_from_json(doc.at("config"));
    a.policy = net_from_json(doc.at("policy"));
    a.value = net_from_json(doc.at("value"));
    return a;
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_agent(const std::string& path, const Agent& agent) {
  write_file(path, agent_to_json(agent).dump());
}

Agent load_agent(const std::string& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, "checkpoint " + path + " is not valid JSON: " + e.what());
  }
  return agent_from_json(doc);
}

void check_compatible(const Agent& agent, const ChipSpec& spec) {
  const auto obs = static_cast<int>(observation_size(spec, agent.repr()));
  require(agent.n_cells == spec.n_cells && agent.n_actions == spec.num_actions() &&
              agent.policy.shape().input == obs && agent.policy.shape().output == spec.num_actions(),
          ErrorKind::InvalidInput,
          "model was trained for chip '" + agent.chip + "' (" + std::to_string(agent.n_cells) +
              " cells, " + std::to_string(agent.n_actions) +
              " actions) and does not fit this chip (" + std::to_string(spec.n_cells) +
              " cells, " + std::to_string(spec.num_actions()) + " actions)");
}

}  // namespace ionshuttle
