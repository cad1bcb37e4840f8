#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyqas/statevector.hpp"

namespace hyqas {

struct PlacedGate {
  GateSpec gate;
  int moment = 0;
  std::optional<int> param_index;  // set for rotations only
};

struct CircuitMetrics {
  int params = 0;
  int depth = 0;
  int gates = 0;

  friend bool operator==(const CircuitMetrics&, const CircuitMetrics&) = default;
};

/**
 * Circuit under construction.
 *
 * Moments follow local stacking: a gate lands one past the latest moment
 * used by any of its wires. Rotation gates are numbered 0..k-1 in
 * placement order; that numbering indexes the flat parameter vector.
 */
class Circuit {
 public:
  Circuit() = default;
  Circuit(int n_qubits, int capacity);

  int n_qubits() const { return n_qubits_; }
  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(gates_.size()); }
  bool empty() const { return gates_.empty(); }
  const std::vector<PlacedGate>& gates() const { return gates_; }
  const PlacedGate& gate(int i) const { return gates_.at(static_cast<std::size_t>(i)); }

  /// Throws std::length_error when the circuit already holds `capacity` gates.
  void append(const GateSpec& g);

  int param_count() const { return param_count_; }
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  void set_angle(int gate_index, double angle);

  /// Index of the last gate touching `qubit`, or -1.
  int last_gate_on(int qubit) const { return last_gate_.at(static_cast<std::size_t>(qubit)); }

  /// Runs the circuit on |0...0> with its stored angles.
  StateVector simulate() const;
  /// Runs the circuit with rotation angles taken from `params`.
  StateVector simulate(std::span<const double> params) const;

 private:
  int n_qubits_ = 0;
  int capacity_ = 0;
  int param_count_ = 0;
  std::vector<PlacedGate> gates_;
  std::vector<int> last_moment_;
  std::vector<int> last_gate_;
};

/// Value form of Circuit::append.
Circuit append_gate(Circuit c, const GateSpec& g);

CircuitMetrics circuit_metrics(const Circuit& c);

/// Energy of the circuit's state under `params` (or its stored angles).
double circuit_energy(const Circuit& c, const Hamiltonian& h);
double circuit_energy(const Circuit& c, const Hamiltonian& h, std::span<const double> params);

// ---------------------------------------------------------------------------
// Discrete action table: RX on qubits 0..N-1, then RY, then RZ, then ordered
// CNOT pairs in lexicographic (control, target) order. Size 2*C(N,2) + 3N.

int discrete_action_count(int n_qubits);
std::vector<GateSpec> discrete_action_table(int n_qubits);
int rotation_action_index(GateKind kind, int qubit, int n_qubits);
int cnot_action_index(int control, int target, int n_qubits);
/// Index of the table entry matching g (angle ignored).
int action_index(const GateSpec& g, int n_qubits);
/// Gate for table entry `index`; rotations take `angle` (0 when absent).
GateSpec action_gate(int index, int n_qubits, std::optional<double> angle = std::nullopt);
bool action_is_rotation(int index, int n_qubits);

/// Redundant placements given the last gate on each wire, sorted ascending.
std::vector<int> illegal_actions(const Circuit& c);

// ---------------------------------------------------------------------------

/**
 * Observation tensors. `binary` has shape N x (N+3) x n_step: columns 0..N-1
 * hold the CNOT adjacency (row = control, column = target), columns N..N+2
 * the RX/RY/RZ one-hot. `angles` has shape N x 3 x n_step. Row-major, the
 * moment axis fastest.
 */
struct CircuitTensorState {
  int n_qubits = 0;
  int n_step = 0;
  std::vector<double> binary;
  std::vector<double> angles;

  std::size_t binary_offset(int i, int j, int moment) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(n_qubits + 3) +
            static_cast<std::size_t>(j)) * static_cast<std::size_t>(n_step) +
           static_cast<std::size_t>(moment);
  }
  std::size_t angle_offset(int i, int k, int moment) const {
    return (static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(k)) *
               static_cast<std::size_t>(n_step) +
           static_cast<std::size_t>(moment);
  }
  double binary_at(int i, int j, int moment) const { return binary[binary_offset(i, j, moment)]; }
  double angle_at(int i, int k, int moment) const { return angles[angle_offset(i, k, moment)]; }
};

/// Throws std::out_of_range if a moment does not fit in n_step slots.
CircuitTensorState encode_state(const Circuit& c, int n_step);

/// Serialized form: [{"kind": "RX", "qubit": 0, "angle": 0.1}, {"kind": "CNOT",
/// "qubit": 0, "qubit2": 1}, ...]. Moments are recomputed on load.
std::string serialize_circuit(const Circuit& c);
Circuit parse_circuit(std::string_view text, int n_qubits, int capacity = 0);

}  // namespace hyqas
