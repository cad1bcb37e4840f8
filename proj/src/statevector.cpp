#include "hyqas/statevector.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace hyqas {

PauliString::PauliString(std::string_view letters) : letters_(letters) {
  if (letters_.size() > 64) throw std::invalid_argument("Pauli string longer than 64 qubits");
  for (std::size_t k = 0; k < letters_.size(); ++k) {
    const std::uint64_t bit = std::uint64_t{1} << k;
    switch (letters_[k]) {
      case 'I':
        break;
      case 'X':
        flip_mask_ |= bit;
        break;
      case 'Y':
        flip_mask_ |= bit;
        phase_mask_ |= bit;
        ++y_count_;
        break;
      case 'Z':
        phase_mask_ |= bit;
        break;
      default:
        throw std::invalid_argument("unknown Pauli letter '" + std::string(1, letters_[k]) +
                                    "' in \"" + letters_ + "\"");
    }
  }
}

const char* gate_kind_name(GateKind kind) {
  switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

GateKind gate_kind_from_name(std::string_view name) {
  if (name == "RX") return GateKind::RX;
  if (name == "RY") return GateKind::RY;
  if (name == "RZ") return GateKind::RZ;
  if (name == "CNOT") return GateKind::CNOT;
  throw std::invalid_argument("unknown gate kind \"" + std::string(name) + "\"");
}

GateSpec GateSpec::rotation(GateKind kind, int qubit, double angle) {
  if (!is_rotation(kind)) throw std::invalid_argument("GateSpec::rotation: CNOT is not a rotation");
  return GateSpec{kind, qubit, std::nullopt, angle};
}

GateSpec GateSpec::cnot(int control, int target) {
  return GateSpec{GateKind::CNOT, control, target, std::nullopt};
}

void GateSpec::validate(int n_qubits) const {
  if (qubit < 0 || qubit >= n_qubits) {
    throw std::out_of_range("gate qubit " + std::to_string(qubit) + " out of range for " +
                            std::to_string(n_qubits) + " qubits");
  }
  if (kind == GateKind::CNOT) {
    if (!qubit2) throw std::invalid_argument("CNOT without target qubit");
    if (*qubit2 < 0 || *qubit2 >= n_qubits) {
      throw std::out_of_range("CNOT target " + std::to_string(*qubit2) + " out of range");
    }
    if (*qubit2 == qubit) throw std::invalid_argument("CNOT control equals target");
    if (angle) throw std::invalid_argument("CNOT carries no angle");
  } else {
    if (qubit2) throw std::invalid_argument("rotation gate with a second qubit");
    if (!angle) throw std::invalid_argument("rotation gate without angle");
    if (!std::isfinite(*angle)) throw std::invalid_argument("rotation angle is not finite");
  }
}

StateVector StateVector::zero(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw std::invalid_argument("StateVector: n_qubits must be in [1, " +
                                std::to_string(kMaxQubits) + "]");
  }
  StateVector s;
  s.n_qubits_ = n_qubits;
  s.amplitudes_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  s.amplitudes_[0] = 1.0;
  return s;
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("StateVector: amplitude count must be a power of two >= 2");
  }
  StateVector s;
  s.n_qubits_ = std::countr_zero(n);
  if (s.n_qubits_ > kMaxQubits) throw std::invalid_argument("StateVector: too many qubits");
  s.amplitudes_ = std::move(amplitudes);
  return s;
}

double StateVector::norm() const {
  double acc = 0.0;
  for (const auto& a : amplitudes_) acc += std::norm(a);
  return std::sqrt(acc);
}

void apply_gate_inplace(StateVector& state, const GateSpec& gate) {
  gate.validate(state.n_qubits());
  auto& amp = state.amplitudes();
  const std::size_t dim = amp.size();

  if (gate.kind == GateKind::CNOT) {
    const std::size_t cmask = std::size_t{1} << gate.qubit;
    const std::size_t tmask = std::size_t{1} << *gate.qubit2;
    for (std::size_t i = 0; i < dim; ++i) {
      if ((i & cmask) && !(i & tmask)) std::swap(amp[i], amp[i | tmask]);
    }
    return;
  }

  const double half = 0.5 * *gate.angle;
  const double c = std::cos(half);
  const double s = std::sin(half);
  // 2x2 matrix [[m00, m01], [m10, m11]] acting on (|0>, |1>) of the target
  Complex m00, m01, m10, m11;
  switch (gate.kind) {
    case GateKind::RX:
      m00 = c, m01 = Complex{0.0, -s}, m10 = Complex{0.0, -s}, m11 = c;
      break;
    case GateKind::RY:
      m00 = c, m01 = -s, m10 = s, m11 = c;
      break;
    default:  // RZ
      m00 = Complex{c, -s}, m01 = 0.0, m10 = 0.0, m11 = Complex{c, s};
      break;
  }
  const std::size_t mask = std::size_t{1} << gate.qubit;
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const Complex a0 = amp[i];
    const Complex a1 = amp[i | mask];
    amp[i] = m00 * a0 + m01 * a1;
    amp[i | mask] = m10 * a0 + m11 * a1;
  }
}

namespace {

Complex i_power(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

void require_width(const StateVector& state, int n_qubits) {
  if (state.n_qubits() != n_qubits) {
    throw std::invalid_argument("qubit-count mismatch: state has " +
                                std::to_string(state.n_qubits()) + ", operator has " +
                                std::to_string(n_qubits));
  }
}

}  // namespace

Complex pauli_expectation_complex(const StateVector& state, const PauliString& p) {
  require_width(state, p.n_qubits());
  const auto& amp = state.amplitudes();
  const std::uint64_t flip = p.flip_mask();
  const std::uint64_t phase = p.phase_mask();
  Complex acc{0.0, 0.0};
  for (std::uint64_t b = 0; b < amp.size(); ++b) {
    const Complex term = std::conj(amp[b ^ flip]) * amp[b];
    if (std::popcount(b & phase) & 1) {
      acc -= term;
    } else {
      acc += term;
    }
  }
  return i_power(p.y_count()) * acc;
}

double pauli_expectation(const StateVector& state, const PauliString& p) {
  return pauli_expectation_complex(state, p).real();
}

double hamiltonian_expectation(const StateVector& state, const Hamiltonian& h) {
  require_width(state, h.n_qubits);
  double energy = 0.0;
  for (const auto& term : h.terms) {
    energy += term.coeff * pauli_expectation(state, term.pauli);
  }
  return energy;
}

double exact_ground_energy(const Hamiltonian& h) {
  if (h.n_qubits < 1 || h.n_qubits > kMaxQubits) {
    throw std::invalid_argument("exact_ground_energy: n_qubits must be in [1, " +
                                std::to_string(kMaxQubits) + "] for dense diagonalization");
  }
  const Eigen::Index dim = Eigen::Index{1} << h.n_qubits;
  bool real = true;
  for (const auto& t : h.terms) real = real && (t.pauli.y_count() % 2 == 0);

  auto fill = [&](auto& m, auto convert) {
    m.setZero(dim, dim);
    for (const auto& t : h.terms) {
      const Complex ph = i_power(t.pauli.y_count());
      for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        const double sign = (std::popcount(b & t.pauli.phase_mask()) & 1) ? -1.0 : 1.0;
        m(static_cast<Eigen::Index>(b ^ t.pauli.flip_mask()), static_cast<Eigen::Index>(b)) +=
            convert(t.coeff * sign * ph);
      }
    }
  };

  if (real) {
    Eigen::MatrixXd m;
    fill(m, [](Complex z) { return z.real(); });
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
  }
  Eigen::MatrixXcd m;
  fill(m, [](Complex z) { return z; });
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

}  // namespace hyqas
