#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace hyqas {

/// One agent decision: gate choice, its initial angle, refine deltas.
struct HybridAction {
  int disc = 0;
  /// Present exactly when the chosen gate is a rotation with an active init head.
  std::optional<double> init_angle;
  /// One slot per construction step; zero wherever the delta mask is zero.
  std::vector<double> deltas;

  friend bool operator==(const HybridAction&, const HybridAction&) = default;
};

/// Binary masks over the discrete table (illegal, param) and steps (delta).
struct MaskBundle {
  std::vector<std::uint8_t> legal;  // 1 = may be sampled
  std::vector<std::uint8_t> param;  // 1 = rotation candidate with an init head
  std::vector<std::uint8_t> delta;  // 1 = that prior step placed a rotation

  int legal_count() const {
    int k = 0;
    for (auto v : legal) k += v != 0;
    return k;
  }
};

}  // namespace hyqas
