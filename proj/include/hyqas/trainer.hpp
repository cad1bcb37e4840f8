#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyqas/environment.hpp"
#include "hyqas/policy.hpp"

namespace hyqas {

enum class Variant { Full, NoHybrid, NoRefine, NoExternalOpt };

const char* variant_name(Variant v);
Variant variant_from_name(std::string_view name);

/// Applies a variant to the environment and to the policy masks.
EnvConfig variant_env_config(EnvConfig cfg, Variant v);
MaskBundle variant_masks(MaskBundle m, Variant v);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  int episodes_total = 300;
  int batch_size = 8;  // trajectories per update
  double learning_rate = 3e-4;
  double gamma_final = 0.95;
  double entropy_beta = 0.01;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // updates between checkpoints; 0 disables
  bool retain_best = true;
  double grad_clip = 5.0;  // global L2 norm
  std::optional<AdamConfig> adam;  // plain SGD when absent
  Variant variant = Variant::Full;
  CurriculumHyper curriculum;

  void validate() const;
};

struct TrajectoryStep {
  CircuitTensorState state;
  HybridAction action;
  MaskBundle masks;
  LogProbParts log_prob;
  double reward = 0.0;
  double energy = 0.0;        // post-optimization
  double agent_energy = 0.0;  // at the agent's angles
  int optimizer_evals = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  int episode = 0;
  int cap = 0;  // sampled L
  double final_energy = 0.0;
  double error = 0.0;  // |final_energy - exact ground energy|
  bool succeeded = false;
  CircuitMetrics metrics;
  Circuit circuit;                       // agent angles
  std::vector<double> optimized_params;  // final optimizer output

  double reward_sum() const;
};

/// R_t = r_t + gamma R_{t+1} with gamma = gamma_final^(1/T), accumulated in extended precision.
std::vector<double> returns_to_go(std::span<const double> rewards, int T, double gamma_final);
long double discount_factor(int T, double gamma_final);

/// (R - mean) / (std + 1e-8) over all entries; population std.
std::vector<double> advantages(std::span<const double> returns);

/**
 * Runs one episode with `params`. Step energies update `cur.e_low`; the
 * episode-level curriculum update is left to the caller.
 */
Trajectory rollout(const PolicyParams& params, VqeEnvironment& env, CurriculumState& cur,
                   Rng& rng, Variant variant, std::optional<double> exact_energy = std::nullopt);

/// Worker count from HYQAS_THREADS (default: hardware concurrency, at least 1).
int worker_threads();

/// Runs fn(0..n-1) over up to `threads` workers; exceptions are rethrown in index order.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

struct TrainLogRow {
  int episode = 0;
  int update = 0;
  int cap = 0;
  int steps = 0;
  double reward_sum = 0.0;
  double final_energy = 0.0;
  double error = 0.0;
  double xi = 0.0;
  double tau = 0.0;
  bool succeeded = false;
  CircuitMetrics metrics;
  long optimizer_evals = 0;
  double loss = 0.0;  // loss of the update that consumed this episode
};

std::string train_log_header();
std::string format_train_log_row(const TrainLogRow& r);

struct TrainResult {
  PolicyParams final_params;
  PolicyParams best_params;
  double best_error = 0.0;
  int best_episode = -1;
  Circuit best_circuit;
  std::vector<double> best_optimized_params;
  CurriculumState curriculum;
  std::vector<TrainLogRow> log;
  int updates = 0;
};

struct TrainHooks {
  /// Directory for checkpoints and the training log; empty keeps everything in memory.
  std::filesystem::path out_dir;
  /// Per-update progress callback (update index, episodes done).
  std::function<void(int, int, const TrainResult&)> on_update;
  /// Overrides HYQAS_THREADS when > 0.
  int threads = 0;
  /// Merged into every checkpoint header.
  nlohmann::json extra_metadata = nlohmann::json::object();
};

TrainResult train(const TrainConfig& cfg, const Hamiltonian& h, const EnvConfig& env_cfg,
                  const PolicyConfig& policy_cfg, const TrainHooks& hooks = {});

/// Applies one clipped SGD or Adam step; returns the pre-clip gradient norm.
struct UpdaterState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};
double apply_update(PolicyParams& params, std::vector<double> grad, const TrainConfig& cfg,
                    UpdaterState& state);

// ---------------------------------------------------------------------------
// Evaluation

enum class InitMode { Warm, Zero };
const char* init_mode_name(InitMode m);
InitMode init_mode_from_name(std::string_view name);

struct EvalConfig {
  int n_rollouts = 1000;
  std::uint64_t seed = 0;
  bool greedy = false;  // mode of every factor instead of sampling
  Variant variant = Variant::Full;
  OptimizerConfig final_optimizer = [] {
    OptimizerConfig c;
    c.max_evals = 1000;
    return c;
  }();
  /// Threshold used to stop construction early; the initial curriculum when absent.
  std::optional<CurriculumState> curriculum;
  int threads = 0;
};

struct EvalRecord {
  std::uint64_t seed = 0;
  int rollout = 0;
  double error = 0.0;
  int params = 0;
  int depth = 0;
  int gates = 0;
  int optimizer_evals = 0;
  double energy = 0.0;
};

struct PairedEvalRecord {
  EvalRecord warm;
  EvalRecord zero;
};

std::vector<EvalRecord> evaluate_policy(const PolicyParams& params, const Hamiltonian& h,
                                        const EnvConfig& env_cfg, InitMode mode,
                                        const EvalConfig& cfg);

/// Both modes on the same constructed circuits.
std::vector<PairedEvalRecord> evaluate_policy_paired(const PolicyParams& params,
                                                     const Hamiltonian& h,
                                                     const EnvConfig& env_cfg,
                                                     const EvalConfig& cfg);

std::string eval_csv_header();
std::string format_eval_row(const EvalRecord& r);

nlohmann::json curriculum_to_json(const CurriculumState& c);
CurriculumState curriculum_from_json(const nlohmann::json& j);

/// Decimal with 17 significant digits.
std::string format_double(double x);

}  // namespace hyqas
