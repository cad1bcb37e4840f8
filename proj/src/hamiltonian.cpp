#include "hyqas/hamiltonian.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hyqas/statevector.hpp"
#include "json.hpp"

namespace hyqas {

using nlohmann::json;

void Hamiltonian::validate() const {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw std::invalid_argument("Hamiltonian: n_qubits must be in [1, " +
                                std::to_string(kMaxQubits) + "]");
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].pauli.n_qubits() != n_qubits) {
      throw std::invalid_argument("term " + std::to_string(i) + ": Pauli string \"" +
                                  terms[i].pauli.letters() + "\" has length " +
                                  std::to_string(terms[i].pauli.n_qubits()) + ", expected " +
                                  std::to_string(n_qubits));
    }
    if (!std::isfinite(terms[i].coeff)) {
      throw std::invalid_argument("term " + std::to_string(i) + ": non-finite coefficient");
    }
  }
}

namespace {

double finite_number(const json& j, const char* what) {
  if (!j.is_number()) throw std::invalid_argument(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " is not finite");
  return v;
}

}  // namespace

Hamiltonian parse_hamiltonian(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed Hamiltonian document: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("Hamiltonian document must be an object");
  if (!doc.contains("n_qubits") || !doc["n_qubits"].is_number_integer()) {
    throw std::invalid_argument("Hamiltonian document needs integer field n_qubits");
  }
  if (!doc.contains("terms") || !doc["terms"].is_array()) {
    throw std::invalid_argument("Hamiltonian document needs array field terms");
  }

  Hamiltonian h;
  h.name = doc.value("name", std::string{});
  h.n_qubits = doc["n_qubits"].get<int>();
  if (doc.contains("exact_ground_energy") && !doc["exact_ground_energy"].is_null()) {
    h.exact_ground_energy = finite_number(doc["exact_ground_energy"], "exact_ground_energy");
  }
  if (doc.contains("e_min_proxy") && !doc["e_min_proxy"].is_null()) {
    h.e_min_proxy = finite_number(doc["e_min_proxy"], "e_min_proxy");
  }
  for (const auto& t : doc["terms"]) {
    if (!t.is_object() || !t.contains("coeff") || !t.contains("pauli") ||
        !t["pauli"].is_string()) {
      throw std::invalid_argument("each term needs fields coeff and pauli");
    }
    if (!t["coeff"].is_number()) throw std::invalid_argument("term coeff must be a number");
    h.terms.push_back({t["coeff"].get<double>(), PauliString(t["pauli"].get<std::string>())});
  }
  h.validate();
  return h;
}

Hamiltonian load_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open Hamiltonian file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_hamiltonian(buf.str());
}

std::string serialize_hamiltonian(const Hamiltonian& h) {
  json doc;
  doc["name"] = h.name;
  doc["n_qubits"] = h.n_qubits;
  if (h.exact_ground_energy) doc["exact_ground_energy"] = *h.exact_ground_energy;
  if (h.e_min_proxy) doc["e_min_proxy"] = *h.e_min_proxy;
  doc["terms"] = json::array();
  for (const auto& t : h.terms) {
    doc["terms"].push_back({{"coeff", t.coeff}, {"pauli", t.pauli.letters()}});
  }
  return doc.dump(1) + "\n";
}

double emin_proxy(const Hamiltonian& h) {
  if (h.e_min_proxy) return *h.e_min_proxy;
  double sum = 0.0;
  for (const auto& t : h.terms) sum += std::abs(t.coeff);
  return -sum;
}

EnergyBounds energy_bounds(const Hamiltonian& h) {
  EnergyBounds b;
  b.e_min = emin_proxy(h);
  b.e_exact = h.exact_ground_energy ? *h.exact_ground_energy : exact_ground_energy(h);
  if (!(b.e_min < b.e_exact)) {
    throw std::invalid_argument("E_min proxy " + std::to_string(b.e_min) +
                                " is not strictly below the exact ground energy " +
                                std::to_string(b.e_exact));
  }
  return b;
}

}  // namespace hyqas
