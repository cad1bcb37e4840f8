#pragma once

// Independent reference implementations used by the tests.

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <string>
#include <vector>

#include "hyqas/circuit.hpp"
#include "hyqas/hamiltonian.hpp"
#include "hyqas/rng.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using C = std::complex<double>;

inline Mat pauli(char c) {
  Mat m(2, 2);
  switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, C(0, -1), C(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1; break;
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Full operator from per-qubit factors; qubit k is bit k, so qubit n-1 is the leftmost factor.
inline Mat embed(const std::vector<Mat>& per_qubit) {
  Mat out = Mat::Identity(1, 1);
  for (int q = static_cast<int>(per_qubit.size()) - 1; q >= 0; --q) out = kron(out, per_qubit[static_cast<std::size_t>(q)]);
  return out;
}

inline Mat rotation(hyqas::GateKind k, double theta) {
  const char a = k == hyqas::GateKind::RX ? 'X' : k == hyqas::GateKind::RY ? 'Y' : 'Z';
  return std::cos(theta / 2) * pauli('I') - C(0, 1) * std::sin(theta / 2) * pauli(a);
}

inline Mat gate_matrix(const hyqas::GateSpec& g, int n) {
  std::vector<Mat> f(static_cast<std::size_t>(n), pauli('I'));
  if (g.kind != hyqas::GateKind::CNOT) {
    f[static_cast<std::size_t>(g.qubit)] = rotation(g.kind, g.angle.value_or(0.0));
    return embed(f);
  }
  Mat p0(2, 2), p1(2, 2);
  p0 << 1, 0, 0, 0;
  p1 << 0, 0, 0, 1;
  std::vector<Mat> a = f, b = f;
  a[static_cast<std::size_t>(g.qubit)] = p0;
  b[static_cast<std::size_t>(g.qubit)] = p1;
  b[static_cast<std::size_t>(*g.qubit2)] = pauli('X');
  return embed(a) + embed(b);
}

inline Vec simulate(const std::vector<hyqas::GateSpec>& gates, int n) {
  Vec psi = Vec::Zero(Eigen::Index{1} << n);
  psi(0) = 1.0;
  for (const auto& g : gates) psi = gate_matrix(g, n) * psi;
  return psi;
}

inline Mat hamiltonian_matrix(const hyqas::Hamiltonian& h) {
  const Eigen::Index d = Eigen::Index{1} << h.n_qubits;
  Mat m = Mat::Zero(d, d);
  for (const auto& t : h.terms) {
    std::vector<Mat> f;
    for (char c : t.pauli.letters()) f.push_back(pauli(c));
    m += t.coeff * embed(f);
  }
  return m;
}

inline double ground_energy(const hyqas::Hamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hamiltonian_matrix(h));
  return es.eigenvalues()(0);
}

inline std::vector<hyqas::GateSpec> random_gates(hyqas::Rng& rng, int n, int count) {
  std::vector<hyqas::GateSpec> g;
  for (int i = 0; i < count; ++i) {
    const auto kind = static_cast<int>(rng.index(n >= 2 ? 4 : 3));
    if (kind == 3) {
      const int c = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
      int t = static_cast<int>(rng.index(static_cast<std::size_t>(n - 1)));
      if (t >= c) ++t;
      g.push_back(hyqas::GateSpec::cnot(c, t));
    } else {
      g.push_back(hyqas::GateSpec::rotation(static_cast<hyqas::GateKind>(kind),
                                            static_cast<int>(rng.index(static_cast<std::size_t>(n))),
                                            rng.uniform(-3.5, 3.5)));
    }
  }
  return g;
}

inline hyqas::Hamiltonian random_hamiltonian(hyqas::Rng& rng, int n, int terms) {
  hyqas::Hamiltonian h;
  h.name = "random";
  h.n_qubits = n;
  const char letters[] = {'I', 'X', 'Y', 'Z'};
  for (int i = 0; i < terms; ++i) {
    std::string s;
    for (int q = 0; q < n; ++q) s += letters[rng.index(4)];
    h.terms.push_back({rng.uniform(-1.0, 1.0), hyqas::PauliString(s)});
  }
  return h;
}

/// sup |F_a - F_b| evaluated at every sample point.
inline double ks_brute_force(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  double d = 0.0;
  for (double x : pts) {
    const auto ca = std::count_if(a.begin(), a.end(), [x](double v) { return v <= x; });
    const auto cb = std::count_if(b.begin(), b.end(), [x](double v) { return v <= x; });
    d = std::max(d, std::abs(static_cast<double>(ca) / static_cast<double>(a.size()) -
                             static_cast<double>(cb) / static_cast<double>(b.size())));
  }
  return d;
}

/// Step reward normalized by the distance of the previous energy to e_min.
inline double legacy_reward(double e_prev, double e_t, double e_min) {
  return (e_prev - e_t) / (e_prev - e_min);
}

}  // namespace oracle
