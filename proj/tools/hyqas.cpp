#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hyqas/config.hpp"
#include "hyqas/experiments.hpp"

namespace fs = std::filesystem;
using namespace hyqas;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

RunConfig resolve_config(const std::string& path, const Hamiltonian& h) {
  RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
  bind_to_hamiltonian(c, h);
  return c;
}

struct Common {
  std::string hamiltonian;
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid-action RL search for VQE circuits"};
  app.require_subcommand(1);

  // train
  Common tr;
  int tr_episodes = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a policy on one Hamiltonian");
  train_cmd->add_option("--hamiltonian", tr.hamiltonian, "Hamiltonian JSON")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", tr.config, "Run config JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", tr.seed, "Seed");
  train_cmd->add_option("--out", tr.out, "Output directory");
  train_cmd->add_option("--episodes", tr_episodes, "Override episodes_total");

  // eval
  std::string ev_ckpt, ev_mode = "warm", ev_ham, ev_config, ev_out;
  int ev_rollouts = 0;
  std::uint64_t ev_seed = 0;
  bool ev_greedy = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ev_ckpt, "Policy checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--init-mode", ev_mode, "warm|zero|both")
      ->check(CLI::IsMember({"warm", "zero", "both"}));
  eval_cmd->add_option("--rollouts", ev_rollouts, "Number of rollouts");
  eval_cmd->add_option("--hamiltonian", ev_ham, "Hamiltonian JSON (default: from the checkpoint)");
  eval_cmd->add_option("--config", ev_config, "Run config JSON (default: from the checkpoint)");
  eval_cmd->add_option("--seed", ev_seed, "Seed");
  eval_cmd->add_option("--out", ev_out, "Output directory (default: next to the checkpoint)");
  eval_cmd->add_flag("--greedy", ev_greedy, "Use the mode of every policy factor");

  // ablate
  Common ab;
  std::string ab_variant = "full";
  int ab_rollouts = 0, ab_episodes = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate a variant or the B suite");
  ablate_cmd->add_option("--variant", ab_variant, "full|no_hybrid|no_refine|no_external_opt|bsuite|all")
      ->check(CLI::IsMember({"full", "no_hybrid", "no_refine", "no_external_opt", "bsuite", "all"}));
  ablate_cmd->add_option("--hamiltonian", ab.hamiltonian, "Hamiltonian JSON")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--config", ab.config, "Run config JSON")->check(CLI::ExistingFile);
  ablate_cmd->add_option("--seed", ab.seed, "Seed");
  ablate_cmd->add_option("--out", ab.out, "Output directory");
  ablate_cmd->add_option("--rollouts", ab_rollouts, "Evaluation rollouts");
  ablate_cmd->add_option("--episodes", ab_episodes, "Override episodes_total");

  // init-study
  std::string is_circuit, is_ham, is_out = "out";
  InitStudyConfig is_cfg;
  std::string is_alg;
  auto* init_cmd = app.add_subcommand("init-study", "Initialization sensitivity of a frozen circuit");
  init_cmd->add_option("--circuit", is_circuit, "Circuit JSON")->required()->check(CLI::ExistingFile);
  init_cmd->add_option("--hamiltonian", is_ham, "Hamiltonian JSON")->required()->check(CLI::ExistingFile);
  init_cmd->add_option("--runs", is_cfg.runs, "Runs per strategy")->check(CLI::PositiveNumber);
  init_cmd->add_option("--sigma", is_cfg.sigma, "Perturbation standard deviation");
  init_cmd->add_option("--seed", is_cfg.seed, "Seed");
  init_cmd->add_option("--max-evals", is_cfg.optimizer.max_evals, "Optimizer budget");
  init_cmd->add_option("--algorithm", is_alg, "cobyla|nelder-mead");
  init_cmd->add_flag("--per-run-base", is_cfg.per_run_base, "near_random: fresh base draw per run");
  init_cmd->add_option("--out", is_out, "Output directory");

  // ks-compare
  std::string ks_a, ks_b, ks_col = "energy", ks_out;
  auto* ks_cmd = app.add_subcommand("ks-compare", "Two-sample KS test between CSV columns");
  ks_cmd->add_option("--a", ks_a, "First CSV")->required()->check(CLI::ExistingFile);
  ks_cmd->add_option("--b", ks_b, "Second CSV")->required()->check(CLI::ExistingFile);
  ks_cmd->add_option("--column", ks_col, "Column name");
  ks_cmd->add_option("--out", ks_out, "Write the result as CSV here");

  // report
  std::string rp_in, rp_format = "csv";
  auto* report_cmd = app.add_subcommand("report", "Summaries and plots from result CSVs");
  report_cmd->add_option("--in", rp_in, "Directory with CSV files")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--format", rp_format, "csv|svg")->check(CLI::IsMember({"csv", "svg"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const Hamiltonian h = load_hamiltonian(tr.hamiltonian);
      RunConfig c = resolve_config(tr.config, h);
      if (train_cmd->count("--seed")) c.train.seed = tr.seed;
      if (tr_episodes > 0) c.train.episodes_total = tr_episodes;
      TrainHooks hooks;
      hooks.out_dir = tr.out;
      hooks.extra_metadata = {{"hamiltonian_path", fs::absolute(tr.hamiltonian).string()},
                              {"run_config", run_config_to_json(c)}};
      hooks.on_update = [&](int update, int done, const TrainResult& r) {
        std::fprintf(stderr, "\rupdate %d  episodes %d/%d  best error %.3e", update, done,
                     c.train.episodes_total, r.best_error);
      };
      fs::create_directories(tr.out);
      write_file(fs::path(tr.out) / "run_config.json", run_config_to_json(c).dump(2) + "\n");
      const TrainResult r = train(c.train, h, c.env, c.policy, hooks);
      std::fprintf(stderr, "\n");
      std::printf("best_error %s\nbest_episode %d\n", format_double(r.best_error).c_str(), r.best_episode);
      return 0;
    }

    if (*eval_cmd) {
      const LoadedCheckpoint ck = load_checkpoint(ev_ckpt);
      const auto& meta = ck.metadata;
      std::string ham_path = ev_ham;
      if (ham_path.empty()) {
        if (!meta.contains("hamiltonian_path")) throw std::runtime_error("checkpoint names no Hamiltonian; pass --hamiltonian");
        ham_path = meta.at("hamiltonian_path").get<std::string>();
      }
      const Hamiltonian h = load_hamiltonian(ham_path);
      RunConfig c;
      if (!ev_config.empty()) {
        c = load_run_config(ev_config);
      } else if (meta.contains("run_config")) {
        c = run_config_from_json(meta.at("run_config"));
      }
      bind_to_hamiltonian(c, h);
      if (!PolicyParams(c.policy).same_layout(ck.params)) {
        throw std::runtime_error("checkpoint shapes do not match the Hamiltonian/config");
      }
      EvalConfig e = c.eval;
      e.seed = ev_seed;
      if (ev_rollouts > 0) e.n_rollouts = ev_rollouts;
      e.greedy = e.greedy || ev_greedy;
      if (meta.contains("variant")) e.variant = variant_from_name(meta.at("variant").get<std::string>());
      if (meta.contains("curriculum")) e.curriculum = curriculum_from_json(meta.at("curriculum"));
      const fs::path out = ev_out.empty() ? fs::path(ev_ckpt).parent_path() : fs::path(ev_out);
      const auto paired = evaluate_policy_paired(ck.params, h, c.env, e);
      std::vector<EvalRecord> warm, zero;
      for (const auto& p : paired) {
        warm.push_back(p.warm);
        zero.push_back(p.zero);
      }
      auto print = [](const char* name, const std::vector<EvalRecord>& recs) {
        std::vector<double> err, evals;
        for (const auto& r : recs) {
          err.push_back(r.error);
          evals.push_back(r.optimizer_evals);
        }
        const auto s = summarize(err);
        std::printf("%s: best_error %s mean_error %s mean_evals %s\n", name, format_double(s.min).c_str(),
                    format_double(s.mean).c_str(), format_double(summarize(evals).mean).c_str());
      };
      if (ev_mode != "zero") {
        write_eval_csv(out / "eval_warm.csv", warm);
        print("warm", warm);
      }
      if (ev_mode != "warm") {
        write_eval_csv(out / "eval_zero.csv", zero);
        print("zero", zero);
      }
      return 0;
    }

    if (*ablate_cmd) {
      ExperimentContext ctx;
      ctx.hamiltonian = load_hamiltonian(ab.hamiltonian);
      RunConfig c = resolve_config(ab.config, ctx.hamiltonian);
      if (ablate_cmd->count("--seed")) c.train.seed = ab.seed;
      if (ab_episodes > 0) c.train.episodes_total = ab_episodes;
      ctx.train = c.train;
      ctx.env = c.env;
      ctx.policy = c.policy;
      ctx.eval = c.eval;
      ctx.eval.seed = c.train.seed;
      if (ab_rollouts > 0) ctx.eval.n_rollouts = ab_rollouts;
      ctx.out_dir = ab.out;
      std::vector<AblationRow> rows;
      if (ab_variant == "bsuite") {
        rows = run_bsuite(ctx);
      } else if (ab_variant == "all") {
        const Variant all[] = {Variant::Full, Variant::NoHybrid, Variant::NoRefine, Variant::NoExternalOpt};
        rows = run_ablation(ctx, all);
      } else {
        const Variant one[] = {variant_from_name(ab_variant)};
        rows = run_ablation(ctx, one);
      }
      std::printf("%s\n", ablation_csv_header().c_str());
      for (const auto& r : rows) std::printf("%s\n", format_ablation_row(r).c_str());
      return 0;
    }

    if (*init_cmd) {
      const Hamiltonian h = load_hamiltonian(is_ham);
      const Circuit circuit = parse_circuit(read_file(is_circuit), h.n_qubits);
      if (!is_alg.empty()) is_cfg.optimizer.algorithm = optimizer_algorithm_from_name(is_alg);
      const InitStudyResult r = run_init_sensitivity(circuit, h, is_cfg);
      if (r.degenerate) std::fprintf(stderr, "circuit has no rotation gates; the study is degenerate\n");
      write_init_study_csv(fs::path(is_out) / "init_study.csv", r);
      std::vector<std::pair<std::string, SummaryStats>> rows;
      for (const auto& [s, st] : r.stats) rows.emplace_back(init_strategy_name(s), st);
      write_summary_csv(fs::path(is_out) / "init_study_summary.csv", rows);
      std::printf("strategy,mean,std,min,max,n\n");
      for (const auto& [name, s] : rows) {
        std::printf("%s,%s,%s,%s,%s,%d\n", name.c_str(), format_double(s.mean).c_str(),
                    format_double(s.std).c_str(), format_double(s.min).c_str(),
                    format_double(s.max).c_str(), s.n);
      }
      return 0;
    }

    if (*ks_cmd) {
      const auto a = read_csv_column(ks_a, ks_col);
      const auto b = read_csv_column(ks_b, ks_col);
      const KsResult k = ks_two_sample(a, b);
      const std::string text = "d,p_value,n_a,n_b\n" + format_double(k.d) + "," + format_double(k.p) + "," +
                               std::to_string(a.size()) + "," + std::to_string(b.size()) + "\n";
      std::printf("%s", text.c_str());
      if (!ks_out.empty()) write_file(ks_out, text);
      return 0;
    }

    if (*report_cmd) {
      const auto files = emit_report(rp_in, rp_format == "svg" ? ReportFormat::Svg : ReportFormat::Csv);
      for (const auto& f : files) std::printf("%s\n", f.string().c_str());
      return 0;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
