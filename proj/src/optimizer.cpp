#include "hyqas/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hyqas {

const char* optimizer_algorithm_name(OptimizerAlgorithm a) {
  return a == OptimizerAlgorithm::CobylaLike ? "cobyla" : "nelder-mead";
}

OptimizerAlgorithm optimizer_algorithm_from_name(std::string_view name) {
  if (name == "cobyla" || name == "COBYLA_LIKE") return OptimizerAlgorithm::CobylaLike;
  if (name == "nelder-mead" || name == "NELDER_MEAD") return OptimizerAlgorithm::NelderMead;
  throw std::invalid_argument("unknown optimizer algorithm \"" + std::string(name) + "\"");
}

void OptimizerConfig::validate() const {
  if (max_evals < 1) throw std::invalid_argument("OptimizerConfig: max_evals must be >= 1");
  if (!(initial_step > 0.0)) throw std::invalid_argument("OptimizerConfig: initial_step must be > 0");
  if (!(final_step > 0.0) || final_step > initial_step) {
    throw std::invalid_argument("OptimizerConfig: final_step must be in (0, initial_step]");
  }
  if (!(convergence_tol > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: convergence_tol must be > 0");
  }
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BudgetExhausted {};

/// Counts evaluations and keeps the best point seen.
class Evaluator {
 public:
  Evaluator(const Objective& f, int max_evals) : f_(f), max_evals_(max_evals) {}

  double operator()(const VectorXd& x) {
    if (n_evals_ >= max_evals_) throw BudgetExhausted{};
    const double v = f_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    ++n_evals_;
    if (!std::isfinite(v)) {
      throw std::runtime_error("objective returned a non-finite value at evaluation " +
                               std::to_string(n_evals_));
    }
    if (n_evals_ == 1 || v < best_value_) {
      best_value_ = v;
      best_ = x;
    }
    trace_.push_back(best_value_);
    return v;
  }

  OptimizeResult result(bool converged) const {
    OptimizeResult r;
    r.best_params.assign(best_.data(), best_.data() + best_.size());
    r.best_value = best_value_;
    r.n_evals = n_evals_;
    r.converged = converged;
    r.trace = trace_;
    return r;
  }

 private:
  const Objective& f_;
  int max_evals_;
  int n_evals_ = 0;
  double best_value_ = 0.0;
  VectorXd best_;
  std::vector<double> trace_;
};

Eigen::Index argmin(const VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) < v(best)) best = i;
  }
  return best;
}

// Linear-model trust-region search on an n+1 point simplex, in the spirit of
// Powell's COBYLA without constraints. The model gradient comes from
// interpolation on the simplex; steps of length rho follow its negative.
// rho halves whenever an acceptable simplex yields a poor step.
bool cobyla_like(Evaluator& eval, const VectorXd& x0, const OptimizerConfig& cfg) {
  constexpr double kFar = 2.1;     // vertices beyond kFar*rho are re-placed
  constexpr double kFlat = 0.25;   // vertices closer than kFlat*rho to the opposite face
  constexpr double kGeomStep = 0.5;
  constexpr double kPoorRatio = 0.1;

  const Eigen::Index n = x0.size();
  double rho = cfg.initial_step;
  std::vector<VectorXd> pts(static_cast<std::size_t>(n + 1));
  VectorXd fv(n + 1);
  pts[0] = x0;
  fv(0) = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXd x = x0;
    x(i) += rho;
    pts[static_cast<std::size_t>(i + 1)] = x;
    fv(i + 1) = eval(x);
  }

  bool last_failed = false;
  MatrixXd D(n, n);
  VectorXd df(n);
  std::vector<Eigen::Index> others(static_cast<std::size_t>(n));
  for (;;) {
    const Eigen::Index b = argmin(fv);
    const VectorXd& xb = pts[static_cast<std::size_t>(b)];
    for (Eigen::Index k = 0, j = 0; j <= n; ++j) {
      if (j == b) continue;
      others[static_cast<std::size_t>(k)] = j;
      D.row(k) = (pts[static_cast<std::size_t>(j)] - xb).transpose();
      df(k) = fv(j) - fv(b);
      ++k;
    }
    Eigen::FullPivLU<MatrixXd> lu(D);
    const bool invertible = lu.isInvertible();
    MatrixXd Dinv = invertible ? MatrixXd(lu.inverse()) : MatrixXd::Zero(n, n);

    // geometry: pick the farthest vertex, else the flattest one
    Eigen::Index bad = -1;
    double worst = kFar * rho;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double dist = D.row(k).norm();
      if (dist > worst) {
        worst = dist;
        bad = k;
      }
    }
    if (bad < 0) {
      double flattest = kFlat * rho;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double cn = Dinv.col(k).norm();
        const double sigma = (invertible && cn > 0.0) ? 1.0 / cn : 0.0;
        if (sigma < flattest) {
          flattest = sigma;
          bad = k;
        }
      }
    }
    const VectorXd g = invertible ? VectorXd(Dinv * df) : VectorXd::Zero(n);

    if (bad >= 0) {
      VectorXd dir;
      if (invertible && Dinv.col(bad).norm() > 0.0) {
        dir = Dinv.col(bad).normalized();
      } else {
        // degenerate simplex: restore an axis direction for this vertex slot
        dir = VectorXd::Unit(n, bad);
      }
      if (g.dot(dir) > 0.0) dir = -dir;
      const VectorXd xn = xb + kGeomStep * rho * dir;
      const auto slot = others[static_cast<std::size_t>(bad)];
      pts[static_cast<std::size_t>(slot)] = xn;
      fv(slot) = eval(xn);
      continue;
    }

    if (last_failed) {
      if (rho <= cfg.final_step) return true;
      rho *= 0.5;
      if (rho <= 1.5 * cfg.final_step) rho = cfg.final_step;
      last_failed = false;
      continue;
    }

    const double gnorm = g.norm();
    const double predicted = rho * gnorm;
    if (!(predicted >= cfg.convergence_tol)) {
      last_failed = true;
      continue;
    }
    const VectorXd d = -(rho / gnorm) * g;
    const VectorXd xn = xb + d;
    const double fn = eval(xn);
    const double ratio = (fv(b) - fn) / predicted;

    // barycentric weights of the step: replacing vertex k scales the
    // simplex volume by |lambda_k|
    const VectorXd lambda = Dinv.transpose() * d;
    Eigen::Index pick = 0;
    double best_score = -1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double dist = (pts[static_cast<std::size_t>(others[static_cast<std::size_t>(k)])] - xn).norm();
      const double score = std::abs(lambda(k)) * std::max(1.0, (dist / rho) * (dist / rho));
      if (score > best_score) {
        best_score = score;
        pick = k;
      }
    }
    const auto slot = others[static_cast<std::size_t>(pick)];
    if (fn < fv(b) || fn < fv(slot)) {
      pts[static_cast<std::size_t>(slot)] = xn;
      fv(slot) = fn;
    }
    last_failed = ratio < kPoorRatio;
  }
}

bool nelder_mead(Evaluator& eval, const VectorXd& x0, const OptimizerConfig& cfg) {
  const Eigen::Index n = x0.size();
  std::vector<VectorXd> pts(static_cast<std::size_t>(n + 1));
  std::vector<double> fv(static_cast<std::size_t>(n + 1));
  pts[0] = x0;
  fv[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    VectorXd x = x0;
    x(i) += cfg.initial_step;
    pts[static_cast<std::size_t>(i + 1)] = x;
    fv[static_cast<std::size_t>(i + 1)] = eval(x);
  }
  std::vector<std::size_t> order(pts.size());
  for (;;) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double spread = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      spread = std::max(spread, std::abs(fv[i] - fv[best]));
      size = std::max(size, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
    }
    if (spread <= cfg.convergence_tol && size <= cfg.final_step) return true;

    VectorXd centroid = VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const VectorXd xc = outside ? VectorXd(centroid + 0.5 * (xr - centroid))
                                : VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      fv[i] = eval(pts[i]);
    }
  }
}

}  // namespace

OptimizeResult minimize(const Objective& objective, std::vector<double> x0,
                        const OptimizerConfig& cfg) {
  cfg.validate();
  Evaluator eval(objective, cfg.max_evals);
  const VectorXd start = Eigen::Map<const VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  if (start.size() == 0) {
    eval(start);
    return eval.result(true);
  }
  bool converged = false;
  try {
    converged = cfg.algorithm == OptimizerAlgorithm::CobylaLike ? cobyla_like(eval, start, cfg)
                                                                : nelder_mead(eval, start, cfg);
  } catch (const BudgetExhausted&) {
    converged = false;
  }
  return eval.result(converged);
}

}  // namespace hyqas
