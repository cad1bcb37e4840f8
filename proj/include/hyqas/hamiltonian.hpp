#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyqas/pauli.hpp"

namespace hyqas {

struct PauliTerm {
  double coeff = 0.0;  // Hartree
  PauliString pauli;
};

/// H = sum_i coeff_i P_i. Immutable after parsing.
struct Hamiltonian {
  std::string name;
  int n_qubits = 0;
  std::vector<PauliTerm> terms;
  std::optional<double> exact_ground_energy;
  std::optional<double> e_min_proxy;

  /// Checks term widths and coefficient finiteness; throws std::invalid_argument.
  void validate() const;
};

/// Reward/curriculum reference energies. Invariant: e_min < e_exact.
struct EnergyBounds {
  double e_min = 0.0;
  double e_exact = 0.0;
};

/**
 * Parse a Hamiltonian document:
 *
 *   { "name": "...", "n_qubits": 4, "exact_ground_energy": -1.13,
 *     "e_min_proxy": -2.0, "terms": [ {"coeff": -0.1, "pauli": "IZIZ"}, ... ] }
 *
 * Term order is preserved and tiny coefficients are kept.
 */
Hamiltonian parse_hamiltonian(std::string_view text);
Hamiltonian load_hamiltonian(const std::filesystem::path& path);
std::string serialize_hamiltonian(const Hamiltonian& h);

/// The metadata proxy when present, otherwise -sum_i |coeff_i|.
double emin_proxy(const Hamiltonian& h);

/// e_min from emin_proxy; e_exact from metadata or dense diagonalization.
/// Throws std::invalid_argument if e_min is not strictly below e_exact.
EnergyBounds energy_bounds(const Hamiltonian& h);

}  // namespace hyqas
