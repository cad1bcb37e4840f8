#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyqas {

enum class OptimizerAlgorithm {
  CobylaLike,  ///< linear interpolation models on a simplex, trust region radius rho
  NelderMead,
};

const char* optimizer_algorithm_name(OptimizerAlgorithm a);
OptimizerAlgorithm optimizer_algorithm_from_name(std::string_view name);

struct OptimizerConfig {
  int max_evals = 200;
  /// Initial trust radius (CobylaLike) or simplex edge (NelderMead), radians.
  double initial_step = 0.5;
  /// Radius at which the search stops (rhoend / simplex size).
  double final_step = 1e-6;
  /// Steps predicting less than this objective decrease are treated as failed
  /// (CobylaLike); simplex value spread for convergence (NelderMead).
  double convergence_tol = 1e-10;
  OptimizerAlgorithm algorithm = OptimizerAlgorithm::CobylaLike;

  void validate() const;
};

struct OptimizeResult {
  std::vector<double> best_params;
  double best_value = 0.0;
  int n_evals = 0;
  bool converged = false;
  /// Best-so-far objective after each evaluation.
  std::vector<double> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/**
 * Minimize `objective` from `x0` without derivatives.
 *
 * Both algorithms are deterministic: identical inputs reproduce n_evals and
 * best_value exactly. A non-finite objective value throws std::runtime_error.
 * An empty x0 is evaluated once and returned unchanged.
 */
OptimizeResult minimize(const Objective& objective, std::vector<double> x0,
                        const OptimizerConfig& cfg);

}  // namespace hyqas
