#include "ionshuttle/circuit.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "ionshuttle/error.hpp"

namespace ionshuttle {

void validate_circuit(const Circuit& circuit) {
  for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
    const Gate& g = circuit.gates[i];
    require(g.x != g.y, ErrorKind::InvalidCircuit,
            "gate " + std::to_string(i + 1) + " acts twice on qubit " + std::to_string(g.x));
    require(g.x >= 1 && g.y >= 1 && g.x <= circuit.num_qubits && g.y <= circuit.num_qubits,
            ErrorKind::InvalidCircuit,
            "gate " + std::to_string(i + 1) + " references a qubit outside 1.." +
                std::to_string(circuit.num_qubits));
  }
}

Circuit parse_circuit(std::string_view text) {
  Circuit circuit;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long x = 0;
    long long y = 0;
    if (!(fields >> x)) continue;
    std::string trailing;
    if (!(fields >> y) || (fields >> trailing)) {
      fail(ErrorKind::InvalidCircuit,
           "line " + std::to_string(line_no) + ": expected two integer qubit labels");
    }
    require(x >= 1 && y >= 1 && x <= 1'000'000 && y <= 1'000'000, ErrorKind::InvalidCircuit,
            "line " + std::to_string(line_no) + ": qubit labels must be positive");
    circuit.gates.push_back(Gate{static_cast<Qubit>(x), static_cast<Qubit>(y)});
    circuit.num_qubits = std::max<int>(circuit.num_qubits, static_cast<int>(std::max(x, y)));
  }
  validate_circuit(circuit);
  return circuit;
}

std::string format_circuit(const Circuit& circuit) {
  std::ostringstream out;
  out << "# qubits " << circuit.num_qubits << ", gates " << circuit.gates.size() << '\n';
  for (const Gate& g : circuit.gates) out << g.x << ' ' << g.y << '\n';
  return out.str();
}

GateDag::GateDag(const Circuit& circuit)
    : gates_(circuit.gates), num_qubits_(circuit.num_qubits) {
  validate_circuit(circuit);
  const int n = gate_count();
  preds_.resize(n);
  succs_.resize(n);
  depth_.assign(n, 0);
  executed_.assign(n, 0);
  chains_.resize(static_cast<std::size_t>(num_qubits_) + 1);
  chain_head_.assign(static_cast<std::size_t>(num_qubits_) + 1, 0);
  std::vector<int> last(static_cast<std::size_t>(num_qubits_) + 1, -1);
  for (int g = 0; g < n; ++g) {
    for (Qubit q : {gates_[g].x, gates_[g].y}) {
      const int p = last[q];
      if (p >= 0 && std::find(preds_[g].begin(), preds_[g].end(), p) == preds_[g].end()) {
        preds_[g].push_back(p);
        succs_[p].push_back(g);
      }
      last[q] = g;
      chains_[q].push_back(g);
    }
    depth_[g] = recompute_depth(g);
  }
  remaining_ = n;
}

int GateDag::recompute_depth(int g) const {
  int d = 0;
  for (int p : preds_[g]) {
    if (!executed_[p]) d = std::max(d, depth_[p] + 1);
  }
  return d;
}

std::span<const int> GateDag::pending_on(Qubit qubit) const {
  if (qubit < 1 || qubit > num_qubits_) return {};
  const auto& chain = chains_[qubit];
  return std::span<const int>(chain).subspan(static_cast<std::size_t>(chain_head_[qubit]));
}

std::vector<int> GateDag::front_layer() const {
  std::vector<int> out;
  for (int g = 0; g < gate_count(); ++g) {
    if (in_front(g)) out.push_back(g);
  }
  return out;
}

void GateDag::execute(int g) {
  require(g >= 0 && g < gate_count(), ErrorKind::DependencyViolation, "gate id out of range");
  require(in_front(g), ErrorKind::DependencyViolation,
          "gate " + std::to_string(g) + " is not in the front layer");
  executed_[g] = 1;
  --remaining_;
  for (Qubit q : {gates_[g].x, gates_[g].y}) ++chain_head_[q];
  // Depths only shrink; propagate along successors until nothing changes.
  std::vector<int> work(succs_[g].begin(), succs_[g].end());
  while (!work.empty()) {
    const int v = work.back();
    work.pop_back();
    const int d = recompute_depth(v);
    if (d == depth_[v]) continue;
    depth_[v] = d;
    work.insert(work.end(), succs_[v].begin(), succs_[v].end());
  }
}

std::vector<int> executable_gates(const GateDag& dag, const ChipSpec& spec, const ChipState& state) {
  std::vector<int> out;
  const Zone& compute = spec.zones[spec.compute_zone];
  for (int s = 0; s < compute.capacity; ++s) {
    const Qubit q = state.cells[compute.first_cell + s];
    if (q == kEmpty) continue;
    auto pending = dag.pending_on(q);
    if (pending.empty()) continue;
    const int g = pending.front();
    if (!dag.in_front(g)) continue;
    const Gate& gate = dag.gate(g);
    const Qubit other = gate.x == q ? gate.y : gate.x;
    bool other_in_compute = false;
    for (int t = 0; t < compute.capacity; ++t) {
      other_in_compute = other_in_compute || state.cells[compute.first_cell + t] == other;
    }
    if (other_in_compute && std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Circuit generate_random_circuit(int num_qubits, int n_gates, Rng& rng) {
  require(num_qubits >= 2, ErrorKind::InvalidInput, "random circuits need at least 2 qubits");
  require(n_gates >= 0, ErrorKind::InvalidInput, "gate count must be non-negative");
  Circuit circuit;
  circuit.num_qubits = num_qubits;
  circuit.gates.reserve(static_cast<std::size_t>(n_gates));
  std::uniform_int_distribution<int> first(1, num_qubits);
  std::uniform_int_distribution<int> second(1, num_qubits - 1);
  for (int i = 0; i < n_gates; ++i) {
    const int x = first(rng);
    int y = second(rng);
    if (y >= x) ++y;
    circuit.gates.push_back(Gate{x, y});
  }
  return circuit;
}

Problem generate_random_problem(const ChipSpec& spec, int n_gates_budget, Rng& rng) {
  require(spec.n_max >= 2, ErrorKind::InvalidInput, "chip must hold at least 2 qubits");
  const int z = std::uniform_int_distribution<int>(2, spec.n_max)(rng);
  const double p = static_cast<double>(z) / spec.n_max;
  const int n_gates = std::binomial_distribution<int>(n_gates_budget, p)(rng);
  Problem problem;
  problem.circuit = generate_random_circuit(z, n_gates, rng);
  problem.placement = random_placement(spec, z, rng);
  return problem;
}

Circuit generate_qv_circuit(int n, Rng& rng) {
  require(n >= 2, ErrorKind::InvalidInput, "quantum volume circuits need n >= 2");
  Circuit circuit;
  circuit.num_qubits = n;
  std::vector<Qubit> perm(static_cast<std::size_t>(n));
  for (int layer = 0; layer < n; ++layer) {
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i + 1 < n; i += 2) circuit.gates.push_back(Gate{perm[i], perm[i + 1]});
  }
  return circuit;
}

namespace {

std::vector<int> storage_zones(const ChipSpec& spec) {
  std::vector<int> out;
  for (int z = 0; z < static_cast<int>(spec.zones.size()); ++z) {
    const ZoneKind k = spec.zones[z].kind;
    if (k == ZoneKind::Storage || k == ZoneKind::Ring) out.push_back(z);
  }
  return out;
}

}  // namespace

ChipState random_placement(const ChipSpec& spec, int num_qubits, Rng& rng) {
  require(num_qubits <= spec.n_max, ErrorKind::Capacity,
          std::to_string(num_qubits) + " qubits exceed chip capacity " +
              std::to_string(spec.n_max));
  ChipState state = empty_state(spec);
  const std::vector<int> zones = storage_zones(spec);
  std::vector<int> fill(zones.size(), 0);
  for (Qubit q = 1; q <= num_qubits; ++q) {
    std::vector<int> open;
    for (std::size_t i = 0; i < zones.size(); ++i) {
      if (fill[i] < spec.zones[zones[i]].capacity) open.push_back(static_cast<int>(i));
    }
    const int pick = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    const Zone& zone = spec.zones[zones[pick]];
    state.cells[zone.first_cell + fill[pick]++] = q;
  }
  return state;
}

ChipState fill_placement(const ChipSpec& spec, int num_qubits) {
  require(num_qubits <= spec.n_max, ErrorKind::Capacity,
          std::to_string(num_qubits) + " qubits exceed chip capacity " +
              std::to_string(spec.n_max));
  ChipState state = empty_state(spec);
  Qubit next = 1;
  for (int z : storage_zones(spec)) {
    const Zone& zone = spec.zones[z];
    for (int s = 0; s < zone.capacity && next <= num_qubits; ++s) {
      state.cells[zone.first_cell + s] = next++;
    }
  }
  return state;
}

}  // namespace ionshuttle
