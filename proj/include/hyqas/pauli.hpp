#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hyqas {

/// Maximum register width handled anywhere in the project.
inline constexpr int kMaxQubits = 10;

/**
 * An n-qubit Pauli string. Character k acts on qubit k.
 *
 * The bit masks encode the action on computational basis states:
 * P|b> = i^{n_y} (-1)^{popcount(b & phase_mask)} |b ^ flip_mask>.
 */
class PauliString {
 public:
  PauliString() = default;

  /// Throws std::invalid_argument on letters outside {I, X, Y, Z}.
  explicit PauliString(std::string_view letters);

  int n_qubits() const { return static_cast<int>(letters_.size()); }
  const std::string& letters() const { return letters_; }
  char at(int qubit) const { return letters_.at(static_cast<std::size_t>(qubit)); }

  std::uint64_t flip_mask() const { return flip_mask_; }
  std::uint64_t phase_mask() const { return phase_mask_; }
  int y_count() const { return y_count_; }
  bool is_identity() const { return flip_mask_ == 0 && phase_mask_ == 0; }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.letters_ == b.letters_;
  }

 private:
  std::string letters_;
  std::uint64_t flip_mask_ = 0;
  std::uint64_t phase_mask_ = 0;
  int y_count_ = 0;
};

}  // namespace hyqas
