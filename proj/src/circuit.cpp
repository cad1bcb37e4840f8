#include "hyqas/circuit.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace hyqas {

Circuit::Circuit(int n_qubits, int capacity)
    : n_qubits_(n_qubits),
      capacity_(capacity),
      last_moment_(static_cast<std::size_t>(std::max(n_qubits, 0)), -1),
      last_gate_(static_cast<std::size_t>(std::max(n_qubits, 0)), -1) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw std::invalid_argument("Circuit: n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                                "]");
  }
  if (capacity < 1) throw std::invalid_argument("Circuit: capacity must be positive");
}

void Circuit::append(const GateSpec& g) {
  g.validate(n_qubits_);
  if (size() >= capacity_) {
    throw std::length_error("circuit capacity of " + std::to_string(capacity_) +
                            " placements exceeded");
  }
  const int index = size();
  PlacedGate placed{g, 0, std::nullopt};
  const auto q = static_cast<std::size_t>(g.qubit);
  if (g.kind == GateKind::CNOT) {
    const auto t = static_cast<std::size_t>(*g.qubit2);
    placed.moment = 1 + std::max(last_moment_[q], last_moment_[t]);
    last_moment_[q] = last_moment_[t] = placed.moment;
    last_gate_[q] = last_gate_[t] = index;
  } else {
    placed.moment = 1 + last_moment_[q];
    last_moment_[q] = placed.moment;
    last_gate_[q] = index;
    placed.param_index = param_count_++;
  }
  gates_.push_back(placed);
}

std::vector<double> Circuit::parameters() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(param_count_));
  for (const auto& g : gates_) {
    if (g.param_index) out.push_back(*g.gate.angle);
  }
  return out;
}

void Circuit::set_parameters(std::span<const double> params) {
  if (static_cast<int>(params.size()) != param_count_) {
    throw std::invalid_argument("set_parameters: expected " + std::to_string(param_count_) +
                                " values, got " + std::to_string(params.size()));
  }
  for (auto& g : gates_) {
    if (g.param_index) g.gate.angle = params[static_cast<std::size_t>(*g.param_index)];
  }
}

void Circuit::set_angle(int gate_index, double angle) {
  auto& g = gates_.at(static_cast<std::size_t>(gate_index));
  if (!g.param_index) throw std::invalid_argument("set_angle: gate is not a rotation");
  g.gate.angle = angle;
}

StateVector Circuit::simulate() const {
  StateVector state = StateVector::zero(n_qubits_);
  for (const auto& g : gates_) apply_gate_inplace(state, g.gate);
  return state;
}

StateVector Circuit::simulate(std::span<const double> params) const {
  if (static_cast<int>(params.size()) != param_count_) {
    throw std::invalid_argument("simulate: expected " + std::to_string(param_count_) +
                                " parameters, got " + std::to_string(params.size()));
  }
  StateVector state = StateVector::zero(n_qubits_);
  for (const auto& g : gates_) {
    if (g.param_index) {
      GateSpec gate = g.gate;
      gate.angle = params[static_cast<std::size_t>(*g.param_index)];
      apply_gate_inplace(state, gate);
    } else {
      apply_gate_inplace(state, g.gate);
    }
  }
  return state;
}

Circuit append_gate(Circuit c, const GateSpec& g) {
  c.append(g);
  return c;
}

CircuitMetrics circuit_metrics(const Circuit& c) {
  CircuitMetrics m;
  m.gates = c.size();
  m.params = c.param_count();
  int max_moment = -1;
  for (const auto& g : c.gates()) max_moment = std::max(max_moment, g.moment);
  m.depth = max_moment + 1;
  return m;
}

double circuit_energy(const Circuit& c, const Hamiltonian& h) {
  return hamiltonian_expectation(c.simulate(), h);
}

double circuit_energy(const Circuit& c, const Hamiltonian& h, std::span<const double> params) {
  return hamiltonian_expectation(c.simulate(params), h);
}

int discrete_action_count(int n_qubits) { return n_qubits * (n_qubits - 1) + 3 * n_qubits; }

int rotation_action_index(GateKind kind, int qubit, int n_qubits) {
  if (!is_rotation(kind)) throw std::invalid_argument("rotation_action_index: CNOT");
  return static_cast<int>(kind) * n_qubits + qubit;
}

int cnot_action_index(int control, int target, int n_qubits) {
  if (control == target) throw std::invalid_argument("cnot_action_index: control == target");
  return 3 * n_qubits + control * (n_qubits - 1) + (target < control ? target : target - 1);
}

int action_index(const GateSpec& g, int n_qubits) {
  if (g.kind == GateKind::CNOT) return cnot_action_index(g.qubit, *g.qubit2, n_qubits);
  return rotation_action_index(g.kind, g.qubit, n_qubits);
}

bool action_is_rotation(int index, int n_qubits) { return index < 3 * n_qubits; }

GateSpec action_gate(int index, int n_qubits, std::optional<double> angle) {
  if (index < 0 || index >= discrete_action_count(n_qubits)) {
    throw std::out_of_range("discrete action " + std::to_string(index) + " out of range");
  }
  if (index < 3 * n_qubits) {
    return GateSpec::rotation(static_cast<GateKind>(index / n_qubits), index % n_qubits,
                              angle.value_or(0.0));
  }
  const int k = index - 3 * n_qubits;
  const int control = k / (n_qubits - 1);
  const int r = k % (n_qubits - 1);
  return GateSpec::cnot(control, r < control ? r : r + 1);
}

std::vector<GateSpec> discrete_action_table(int n_qubits) {
  if (n_qubits < 2) throw std::invalid_argument("discrete_action_table: need at least 2 qubits");
  std::vector<GateSpec> table;
  table.reserve(static_cast<std::size_t>(discrete_action_count(n_qubits)));
  for (int i = 0; i < discrete_action_count(n_qubits); ++i) {
    GateSpec g = action_gate(i, n_qubits);
    g.angle.reset();
    table.push_back(g);
  }
  return table;
}

std::vector<int> illegal_actions(const Circuit& c) {
  const int n = c.n_qubits();
  std::vector<int> out;
  for (int q = 0; q < n; ++q) {
    const int last = c.last_gate_on(q);
    if (last < 0) continue;
    const GateSpec& g = c.gate(last).gate;
    if (is_rotation(g.kind)) {
      out.push_back(rotation_action_index(g.kind, q, n));
    } else if (g.qubit == q && c.last_gate_on(*g.qubit2) == last) {
      // still the latest gate on both wires: its reversal would undo it
      out.push_back(cnot_action_index(*g.qubit2, g.qubit, n));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

CircuitTensorState encode_state(const Circuit& c, int n_step) {
  const int n = c.n_qubits();
  CircuitTensorState s;
  s.n_qubits = n;
  s.n_step = n_step;
  s.binary.assign(static_cast<std::size_t>(n * (n + 3) * n_step), 0.0);
  s.angles.assign(static_cast<std::size_t>(n * 3 * n_step), 0.0);
  for (const auto& pg : c.gates()) {
    if (pg.moment >= n_step) {
      throw std::out_of_range("moment " + std::to_string(pg.moment) + " does not fit in " +
                              std::to_string(n_step) + " slots");
    }
    const GateSpec& g = pg.gate;
    if (g.kind == GateKind::CNOT) {
      s.binary[s.binary_offset(g.qubit, *g.qubit2, pg.moment)] = 1.0;
    } else {
      const int k = static_cast<int>(g.kind);
      s.binary[s.binary_offset(g.qubit, n + k, pg.moment)] = 1.0;
      s.angles[s.angle_offset(g.qubit, k, pg.moment)] = *g.angle;
    }
  }
  return s;
}

std::string serialize_circuit(const Circuit& c) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& pg : c.gates()) {
    nlohmann::json g;
    g["kind"] = gate_kind_name(pg.gate.kind);
    g["qubit"] = pg.gate.qubit;
    if (pg.gate.qubit2) g["qubit2"] = *pg.gate.qubit2;
    if (pg.gate.angle) g["angle"] = *pg.gate.angle;
    doc.push_back(g);
  }
  return doc.dump(1) + "\n";
}

Circuit parse_circuit(std::string_view text, int n_qubits, int capacity) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed circuit document: ") + e.what());
  }
  if (!doc.is_array()) throw std::invalid_argument("circuit document must be an array of gates");
  const int cap = std::max<int>(capacity, std::max<int>(1, static_cast<int>(doc.size())));
  Circuit c(n_qubits, cap);
  for (const auto& g : doc) {
    if (!g.is_object() || !g.contains("kind") || !g.contains("qubit")) {
      throw std::invalid_argument("each gate needs fields kind and qubit");
    }
    GateSpec spec;
    spec.kind = gate_kind_from_name(g["kind"].get<std::string>());
    spec.qubit = g["qubit"].get<int>();
    if (g.contains("qubit2")) spec.qubit2 = g["qubit2"].get<int>();
    if (g.contains("angle")) spec.angle = g["angle"].get<double>();
    c.append(spec);
  }
  return c;
}

}  // namespace hyqas
