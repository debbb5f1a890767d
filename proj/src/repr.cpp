#include "ionshuttle/repr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ionshuttle/error.hpp"

namespace ionshuttle {

EncodingMatrix encode(const ChipState& state, const GateDag& dag, int k_lookahead) {
  EncodingMatrix m;
  m.n_cells = static_cast<int>(state.cells.size());
  m.k_lookahead = k_lookahead;
  m.occupied.assign(static_cast<std::size_t>(m.n_cells), 0);
  m.partner.assign(static_cast<std::size_t>(m.n_cells * k_lookahead), kNoCell);

  Qubit max_label = dag.num_qubits();
  for (Qubit q : state.cells) max_label = std::max(max_label, q);
  std::vector<int> cell_of(static_cast<std::size_t>(max_label) + 1, -1);
  for (int c = 0; c < m.n_cells; ++c) {
    if (state.cells[c] != kEmpty) cell_of[state.cells[c]] = c;
  }

  for (int c = 0; c < m.n_cells; ++c) {
    const Qubit q = state.cells[c];
    if (q == kEmpty) continue;
    m.occupied[c] = 1;
    // Depth strictly increases along a qubit's pending chain, so each depth
    // holds at most one gate and the first hit is also the earliest in p.
    for (int g : dag.pending_on(q)) {
      const int d = dag.depth(g);
      if (d >= k_lookahead) break;
      const Gate& gate = dag.gate(g);
      const Qubit other = gate.x == q ? gate.y : gate.x;
      int& slot = m.partner[c * k_lookahead + d];
      if (slot == kNoCell && other <= max_label && cell_of[other] >= 0) slot = cell_of[other] + 1;
    }
  }
  return m;
}

namespace {

template <typename T>
void sinusoidal_into(std::optional<double> x, double x_max, int bands, std::span<T> out) {
  require(x_max > 0.0 && bands >= 1, ErrorKind::InvalidInput, "sinusoidal needs x_max > 0, b >= 1");
  require(out.size() == static_cast<std::size_t>(2 * bands + 1), ErrorKind::InvalidInput,
          "sinusoidal output has wrong length");
  if (!x) {
    std::fill(out.begin(), out.end(), T(0));
    return;
  }
  const double norm = std::clamp(*x / x_max, 0.0, 1.0);
  out[0] = static_cast<T>(norm);
  double freq = std::numbers::pi;
  for (int i = 0; i < bands; ++i, freq *= 2.0) {
    out[1 + i] = static_cast<T>(std::cos(norm * freq));
    out[1 + bands + i] = static_cast<T>(std::sin(norm * freq));
  }
}

}  // namespace

void sinusoidal(std::optional<double> x, double x_max, int bands, std::span<float> out) {
  sinusoidal_into(x, x_max, bands, out);
}

std::vector<double> sinusoidal(std::optional<double> x, double x_max, int bands) {
  std::vector<double> out(static_cast<std::size_t>(std::max(bands, 0)) * 2 + 1);
  sinusoidal_into<double>(x, x_max, bands, out);
  return out;
}

namespace {

int field_width(const ReprConfig& cfg, int bands) {
  return cfg.encoding == NumericEncoding::Sinusoidal ? 2 * bands + 1 : 1;
}

void embed(const ReprConfig& cfg, std::optional<double> x, double x_max, int bands,
           std::span<float> out) {
  if (cfg.encoding == NumericEncoding::Sinusoidal) {
    sinusoidal(x, x_max, bands, out);
  } else {
    out[0] = x ? static_cast<float>(std::clamp(*x / x_max, 0.0, 1.0)) : 0.0f;
  }
}

}  // namespace

std::size_t observation_size(const ChipSpec& spec, const ReprConfig& cfg) {
  if (cfg.representation == Representation::Naive) {
    return static_cast<std::size_t>(spec.n_cells + 2 * cfg.n_gates_budget);
  }
  const int row = 1 + cfg.k_lookahead * field_width(cfg, cfg.b_cell);
  return static_cast<std::size_t>(spec.n_cells * row + field_width(cfg, cfg.b_total));
}

void observe(const ChipSpec& spec, const ChipState& state, const GateDag& dag,
             const ReprConfig& cfg, std::span<float> out) {
  require(out.size() == observation_size(spec, cfg), ErrorKind::InvalidInput,
          "observation buffer has wrong length");
  if (cfg.representation == Representation::Naive) {
    const std::vector<float> naive = observe_naive(state, dag, cfg.n_gates_budget);
    std::copy(naive.begin(), naive.end(), out.begin());
    return;
  }
  const EncodingMatrix m = encode(state, dag, cfg.k_lookahead);
  const int cell_width = field_width(cfg, cfg.b_cell);
  std::size_t pos = 0;
  for (int c = 0; c < m.n_cells; ++c) {
    out[pos++] = static_cast<float>(m.occupied[c]);
    for (int d = 0; d < m.k_lookahead; ++d) {
      const int partner = m.partner_cell(c, d);
      std::optional<double> value;
      if (partner != kNoCell) value = partner;
      embed(cfg, value, spec.n_cells, cfg.b_cell, out.subspan(pos, cell_width));
      pos += cell_width;
    }
  }
  embed(cfg, static_cast<double>(dag.remaining()), cfg.n_gates_budget, cfg.b_total,
        out.subspan(pos));
}

std::vector<float> observe(const ChipSpec& spec, const ChipState& state, const GateDag& dag,
                           const ReprConfig& cfg) {
  std::vector<float> out(observation_size(spec, cfg));
  observe(spec, state, dag, cfg, out);
  return out;
}

std::vector<float> observe_naive(const ChipState& state, const GateDag& dag, int gate_capacity) {
  std::vector<float> out(state.cells.size() + 2 * static_cast<std::size_t>(gate_capacity), 0.0f);
  std::size_t pos = 0;
  for (Qubit q : state.cells) out[pos++] = static_cast<float>(q);
  int written = 0;
  for (int g = 0; g < dag.gate_count() && written < gate_capacity; ++g) {
    if (dag.executed(g)) continue;
    out[pos++] = static_cast<float>(dag.gate(g).x);
    out[pos++] = static_cast<float>(dag.gate(g).y);
    ++written;
  }
  return out;
}

}  // namespace ionshuttle
