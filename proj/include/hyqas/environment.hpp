#pragma once

#include <optional>
#include <vector>

#include "hyqas/action.hpp"
#include "hyqas/circuit.hpp"
#include "hyqas/hamiltonian.hpp"
#include "hyqas/optimizer.hpp"
#include "hyqas/rng.hpp"

namespace hyqas {

// ---------------------------------------------------------------------------
// Curriculum

struct CurriculumHyper {
  double xi1 = 0.3;     // initial tolerance, Hartree
  double delta = 1e-4;  // greedy-shift slack, Hartree
  double kappa = 10.0;  // amortization divisor
  int greedy_every = 50;
  int success_threshold = 5;
  friend bool operator==(const CurriculumHyper&, const CurriculumHyper&) = default;
};

/**
 * Moving threshold xi = e_min + tau. e_low tracks the lowest energy seen
 * and only ever decreases; tau changes only at episode boundaries.
 */
struct CurriculumState {
  double e_min = 0.0;
  double tau = 0.0;
  double xi = 0.0;
  double e_low = 0.0;
  int success_count = 0;
  int episode_count = 0;
  CurriculumHyper hyper;

  static CurriculumState initial(double e_min, double e_start, const CurriculumHyper& hyper);

  friend bool operator==(const CurriculumState&, const CurriculumState&) = default;
};

CurriculumState curriculum_update_step(CurriculumState cur, double e_t);

/// Counts the episode; every `greedy_every` episodes sets tau = |e_low - e_min| + delta
/// and resets the success count, otherwise tightens tau by delta/kappa while
/// the success count exceeds the threshold.
CurriculumState curriculum_update_episode(CurriculumState cur, bool episode_succeeded);

// ---------------------------------------------------------------------------
// Halting and reward

/// NegativeBinomial(r = n_step, failure probability p) clamped to [1, n_step].
int sample_episode_length(int n_step, double p, Rng& rng);

/**
 * +5 when e_t < xi; -5 when t >= L without reaching xi; otherwise the
 * improvement (e_prev - e_t) over the fixed scale (e_start - e_min),
 * floored at -1.
 */
double compute_reward(double e_t, double e_prev, double e_start, double e_min, double xi, int t,
                      int episode_cap);

inline constexpr double kSuccessReward = 5.0;
inline constexpr double kFailureReward = -5.0;

// ---------------------------------------------------------------------------
// Environment

struct EnvConfig {
  int n_step = 40;
  double halt_p = 0.1;
  bool random_halting = true;  // false: every episode runs to n_step
  bool use_external_optimizer = true;
  bool optimize_every_step = true;  // false: optimize only on the capped last step
  double refine_clip = 1.5707963267948966;  // |delta| applied to angles, radians
  OptimizerConfig optimizer;

  void validate() const;
};

struct EpisodeState {
  Circuit circuit;
  int step = 0;
  int episode_cap = 1;
  double e_prev = 0.0;
  double e_start = 0.0;
  bool done = false;
  std::vector<std::uint8_t> delta_mask;  // per step: 1 if that step placed a rotation
};

struct StepOutcome {
  CircuitTensorState observation;
  double reward = 0.0;
  bool done = false;
  bool succeeded = false;      // terminated by e_t < xi
  double energy = 0.0;         // E_t driving the reward
  double agent_energy = 0.0;   // energy at the agent's own angles
  int optimizer_evals = 0;
  std::vector<double> optimized_params;
};

/**
 * Episode driver for one Hamiltonian. The circuit keeps the agent's
 * (init + refine) angles; the external optimizer works on a copy and only
 * its energy feeds the reward.
 */
class VqeEnvironment {
 public:
  VqeEnvironment(const Hamiltonian& h, EnvConfig cfg, EnergyBounds bounds);

  /// Starts an episode: empty circuit, e_start = <0|H|0>, cap drawn from rng
  /// unless `fixed_cap` is given.
  CircuitTensorState reset(Rng& rng, std::optional<int> fixed_cap = std::nullopt);

  /// Executes one hybrid action. Updates cur.e_low; tau and xi are left
  /// to the episode-level update. Throws std::logic_error on an illegal
  /// discrete action or a finished episode.
  StepOutcome step(const HybridAction& action, CurriculumState& cur);

  MaskBundle masks() const;

  const EpisodeState& state() const { return ep_; }
  const Hamiltonian& hamiltonian() const { return *h_; }
  const EnvConfig& config() const { return cfg_; }
  const EnergyBounds& bounds() const { return bounds_; }
  double empty_energy() const { return e_empty_; }

 private:
  const Hamiltonian* h_;
  EnvConfig cfg_;
  EnergyBounds bounds_;
  double e_empty_ = 0.0;
  EpisodeState ep_;
};

/// Drops the init heads (no hybrid space) and/or the refine deltas.
MaskBundle restrict_masks(MaskBundle m, bool hybrid, bool refine);

}  // namespace hyqas
