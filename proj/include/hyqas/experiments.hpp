#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyqas/trainer.hpp"

namespace hyqas {

// ---------------------------------------------------------------------------
// Statistics

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for n = 1)
  double min = 0.0;
  double max = 0.0;
  int n = 0;
};

SummaryStats summarize(std::span<const double> xs);

/// (E(B3) - E(Bi)) / E(B3) * 100.
double error_reduction(double e_b3, double e_bi);

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

/// Two-sample KS statistic with the asymptotic p-value at n_a n_b / (n_a + n_b).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct SignTestResult {
  int n_less = 0;     // pairs with a < b
  int n_greater = 0;  // pairs with a > b
  int n_ties = 0;
  double p = 1.0;     // P(X >= n_less), X ~ Binomial(n_less + n_greater, 1/2)
};

/// One-sided paired sign test of a < b.
SignTestResult sign_test_less(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Ablations

struct ExperimentContext {
  Hamiltonian hamiltonian;
  EnvConfig env;
  PolicyConfig policy;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path out_dir;  // empty: nothing written
};

struct AblationRow {
  std::string id;       // variant name or B1/B2/B3
  std::string variant;
  std::string init;     // warm or zero
  SummaryStats error;
  double best_error = 0.0;  // min over training episodes and evaluation rollouts
  double mean_params = 0.0;
  double mean_depth = 0.0;
  double mean_gates = 0.0;
  double mean_evals = 0.0;
  std::optional<double> er_percent;
};

/// Trains each variant and evaluates its retained policy with warm init.
std::vector<AblationRow> run_ablation(const ExperimentContext& ctx, std::span<const Variant> variants);

/// B1 (full, warm), B2 (full, zero, same circuits), B3 (no_hybrid) with ER vs B3.
std::vector<AblationRow> run_bsuite(const ExperimentContext& ctx);

std::string ablation_csv_header();
std::string format_ablation_row(const AblationRow& r);

// ---------------------------------------------------------------------------
// Initialization sensitivity

enum class InitStrategy { NearZero, Random, NearRandom };
const char* init_strategy_name(InitStrategy s);
InitStrategy init_strategy_from_name(std::string_view name);

struct InitStudyConfig {
  int runs = 100;
  double sigma = 1e-3;
  std::uint64_t seed = 0;
  bool per_run_base = false;  // near_random: fresh uniform base per run
  OptimizerConfig optimizer = [] {
    OptimizerConfig c;
    c.max_evals = 1000;
    return c;
  }();
  std::vector<InitStrategy> strategies = {InitStrategy::NearZero, InitStrategy::Random,
                                          InitStrategy::NearRandom};
  int threads = 0;
};

struct InitStudyRun {
  InitStrategy strategy = InitStrategy::NearZero;
  int run = 0;
  double final_energy = 0.0;
  int optimizer_evals = 0;
};

struct InitStudyResult {
  std::vector<InitStudyRun> runs;
  std::vector<std::pair<InitStrategy, SummaryStats>> stats;
  bool degenerate = false;  // the circuit has no rotation gates
};

/// Starting angles for one run.
std::vector<double> initial_angles(InitStrategy s, int n_params, const InitStudyConfig& cfg, int run);

InitStudyResult run_init_sensitivity(const Circuit& circuit, const Hamiltonian& h,
                                     const InitStudyConfig& cfg);

// ---------------------------------------------------------------------------
// Report files

void write_eval_csv(const std::filesystem::path& path, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_eval_csv(const std::filesystem::path& path);
void write_init_study_csv(const std::filesystem::path& path, const InitStudyResult& r);
void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, SummaryStats>>& rows);
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows);

/// One numeric column by header name; a single-column file needs no header match.
std::vector<double> read_csv_column(const std::filesystem::path& path, const std::string& column);

/// Overlaid histograms of two samples, annotated with the KS statistic.
std::string histogram_svg(std::span<const double> a, std::span<const double> b,
                          const std::string& label_a, const std::string& label_b,
                          const std::string& title, int bins = 30);

enum class ReportFormat { Csv, Svg };

/// Renders every eval CSV (and init_study.csv) in `in_dir`; returns the files written.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& in_dir,
                                               ReportFormat format);

}  // namespace hyqas
