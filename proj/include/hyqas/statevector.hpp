#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "hyqas/hamiltonian.hpp"
#include "hyqas/pauli.hpp"

namespace hyqas {

using Complex = std::complex<double>;

enum class GateKind { RX, RY, RZ, CNOT };

const char* gate_kind_name(GateKind kind);
GateKind gate_kind_from_name(std::string_view name);

inline bool is_rotation(GateKind kind) { return kind != GateKind::CNOT; }

/**
 * One gate. Rotations use `qubit` and carry `angle`; CNOT uses
 * `qubit` as control and `qubit2` as target.
 *
 * R_a(theta) = exp(-i theta a / 2) for a in {X, Y, Z}.
 */
struct GateSpec {
  GateKind kind = GateKind::RX;
  int qubit = 0;
  std::optional<int> qubit2;
  std::optional<double> angle;

  static GateSpec rotation(GateKind kind, int qubit, double angle);
  static GateSpec cnot(int control, int target);

  /// Throws std::out_of_range for bad indices, std::invalid_argument for
  /// malformed gates (missing or non-finite angle, control == target).
  void validate(int n_qubits) const;

  friend bool operator==(const GateSpec&, const GateSpec&) = default;
};

/// Dense register. Basis index bit k is qubit k (little-endian).
class StateVector {
 public:
  StateVector() = default;

  /// |0...0> on n qubits, 1 <= n <= kMaxQubits.
  static StateVector zero(int n_qubits);
  /// Takes amplitudes as given; the length must be a power of two.
  static StateVector from_amplitudes(std::vector<Complex> amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amplitudes_.size(); }
  const std::vector<Complex>& amplitudes() const { return amplitudes_; }
  std::vector<Complex>& amplitudes() { return amplitudes_; }
  const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm() const;

 private:
  int n_qubits_ = 0;
  std::vector<Complex> amplitudes_;
};

void apply_gate_inplace(StateVector& state, const GateSpec& gate);

inline StateVector apply_gate(StateVector state, const GateSpec& gate) {
  apply_gate_inplace(state, gate);
  return state;
}

/// <psi|P|psi> before discarding the imaginary residue.
Complex pauli_expectation_complex(const StateVector& state, const PauliString& p);
double pauli_expectation(const StateVector& state, const PauliString& p);

double hamiltonian_expectation(const StateVector& state, const Hamiltonian& h);

/// Smallest eigenvalue of the dense 2^n x 2^n matrix of h (n <= kMaxQubits).
double exact_ground_energy(const Hamiltonian& h);

}  // namespace hyqas
