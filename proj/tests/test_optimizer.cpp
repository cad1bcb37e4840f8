#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "hyqas/circuit.hpp"
#include "hyqas/optimizer.hpp"

using namespace hyqas;
using doctest::Approx;

namespace {

double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

}  // namespace

TEST_CASE("quadratic in one dimension") {
  for (auto alg : {OptimizerAlgorithm::CobylaLike, OptimizerAlgorithm::NelderMead}) {
    OptimizerConfig cfg;
    cfg.algorithm = alg;
    const auto r = minimize([](std::span<const double> x) { return (x[0] - 1.0) * (x[0] - 1.0); },
                            {0.0}, cfg);
    CHECK(std::abs(r.best_params[0] - 1.0) <= 1e-6);
    CHECK(r.best_value <= 1e-12);
    CHECK(r.n_evals <= cfg.max_evals);
    CHECK(static_cast<int>(r.trace.size()) == r.n_evals);
  }
}

TEST_CASE("rosenbrock with nelder-mead") {
  OptimizerConfig cfg;
  cfg.algorithm = OptimizerAlgorithm::NelderMead;
  cfg.max_evals = 2000;
  cfg.final_step = 1e-9;
  cfg.convergence_tol = 1e-16;
  const auto r = minimize(rosenbrock, {-1.2, 1.0}, cfg);
  CHECK(r.n_evals <= 2000);
  CHECK(r.best_value <= 1e-6);
}

TEST_CASE("rosenbrock with the trust-region method improves") {
  OptimizerConfig cfg;
  cfg.max_evals = 2000;
  const auto r = minimize(rosenbrock, {-1.2, 1.0}, cfg);
  CHECK(r.best_value < rosenbrock(std::vector<double>{-1.2, 1.0}));
  CHECK(r.n_evals <= 2000);
}

TEST_CASE("small ansatz reaches the grid optimum") {
  const auto h = load_hamiltonian(std::string(HYQAS_DATA_DIR) + "/hamiltonians/toy-2.json");
  Circuit c(2, 3);
  c.append(GateSpec::rotation(GateKind::RY, 0, 0.0));
  c.append(GateSpec::cnot(0, 1));
  c.append(GateSpec::rotation(GateKind::RY, 1, 0.0));
  const Objective f = [&](std::span<const double> x) { return circuit_energy(c, h, x); };

  double grid = std::numeric_limits<double>::infinity();
  const int m = 360;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double x[2] = {2 * std::numbers::pi * i / m, 2 * std::numbers::pi * j / m};
      grid = std::min(grid, f(x));
    }
  }
  for (auto alg : {OptimizerAlgorithm::CobylaLike, OptimizerAlgorithm::NelderMead}) {
    OptimizerConfig cfg;
    cfg.algorithm = alg;
    cfg.max_evals = 1000;
    const auto r = minimize(f, {0.1, 0.1}, cfg);
    CHECK(r.best_value <= grid + 1e-4);
    CHECK(r.best_value >= grid - 1e-4);
  }
}

TEST_CASE("deterministic and monotone") {
  OptimizerConfig cfg;
  cfg.max_evals = 150;
  const auto a = minimize(rosenbrock, {0.3, -0.4}, cfg);
  const auto b = minimize(rosenbrock, {0.3, -0.4}, cfg);
  CHECK(a.n_evals == b.n_evals);
  CHECK(a.best_value == b.best_value);
  CHECK(a.best_params == b.best_params);
  CHECK(a.best_value <= rosenbrock(std::vector<double>{0.3, -0.4}));
  for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i] <= a.trace[i - 1]);
}

TEST_CASE("budget is respected") {
  for (int budget : {1, 2, 5, 10}) {
    OptimizerConfig cfg;
    cfg.max_evals = budget;
    const auto r = minimize(rosenbrock, {0.0, 0.0}, cfg);
    CHECK(r.n_evals <= budget);
  }
}

TEST_CASE("non-finite objective throws") {
  OptimizerConfig cfg;
  CHECK_THROWS_AS(minimize([](std::span<const double>) { return std::nan(""); }, {0.0}, cfg),
                  std::runtime_error);
  int calls = 0;
  CHECK_THROWS_AS(minimize(
                      [&](std::span<const double> x) {
                        return ++calls > 3 ? std::numeric_limits<double>::infinity() : x[0] * x[0];
                      },
                      {1.0}, cfg),
                  std::runtime_error);
}

TEST_CASE("empty parameter vector") {
  OptimizerConfig cfg;
  const auto r = minimize([](std::span<const double>) { return 2.5; }, {}, cfg);
  CHECK(r.n_evals == 1);
  CHECK(r.best_value == 2.5);
  CHECK(r.best_params.empty());
}

TEST_CASE("invalid configuration") {
  OptimizerConfig cfg;
  cfg.max_evals = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(optimizer_algorithm_from_name("nelder-mead") == OptimizerAlgorithm::NelderMead);
  CHECK_THROWS(optimizer_algorithm_from_name("bfgs"));
}
