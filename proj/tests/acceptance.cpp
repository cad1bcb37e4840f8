// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hyqas/config.hpp"
#include "hyqas/experiments.hpp"
#include "oracles.hpp"

using namespace hyqas;
namespace fs = std::filesystem;

namespace {

const std::string kData = HYQAS_DATA_DIR;
const std::string kCli = HYQAS_CLI_PATH;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Hamiltonian fixture(const std::string& name) {
  return load_hamiltonian(kData + "/hamiltonians/" + name + ".json");
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("hyqas_acceptance_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------

Outcome simulator_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double amp_err = 0.0, exp_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(4));
    const auto gates = oracle::random_gates(rng, n, 1 + static_cast<int>(rng.index(20)));
    auto s = StateVector::zero(n);
    for (const auto& g : gates) apply_gate_inplace(s, g);
    const auto ref = oracle::simulate(gates, n);
    for (std::size_t i = 0; i < s.dim(); ++i) {
      amp_err = std::max(amp_err, std::abs(s[i] - ref(static_cast<Eigen::Index>(i))));
    }
    const auto h = oracle::random_hamiltonian(rng, n, 1 + static_cast<int>(rng.index(10)));
    const double e_ref = (ref.adjoint() * oracle::hamiltonian_matrix(h) * ref)(0).real();
    exp_err = std::max(exp_err, std::abs(hamiltonian_expectation(s, h) - e_ref));
  }
  const double t = seconds_since(t0);
  return {amp_err <= 1e-12 && exp_err <= 1e-10 && t < 10.0,
          "max amplitude error " + fmt("%.2e", amp_err) + ", max expectation error " +
              fmt("%.2e", exp_err) + ", " + fmt("%.2f", t) + " s"};
}

Outcome variational_bound() {
  const std::vector<Hamiltonian> hs{fixture("toy-2"), fixture("h2-4"), fixture("lih-4"),
                                    fixture("lih-6"), fixture("h2o-8")};
  Rng rng(202);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& h = hs[rng.index(hs.size())];
    auto s = StateVector::zero(h.n_qubits);
    for (const auto& g : oracle::random_gates(rng, h.n_qubits, 1 + static_cast<int>(rng.index(30)))) {
      apply_gate_inplace(s, g);
    }
    worst = std::min(worst, hamiltonian_expectation(s, h) - *h.exact_ground_energy);
  }
  return {worst >= -1e-9, "min E - E_exact over 1000 draws " + fmt("%.3e", worst)};
}

Outcome reward_case_study() {
  const double e_start = 0.0, e_min = -1.0, xi = -10.0;
  const double a = compute_reward(-0.5, 0.0, e_start, e_min, xi, 1, 10);
  const double path[] = {0.0, -0.4, -0.3, -0.5};
  std::vector<double> steps;
  double b = 0.0, legacy = 0.0;
  for (int t = 1; t < 4; ++t) {
    steps.push_back(compute_reward(path[t], path[t - 1], e_start, e_min, xi, t, 10));
    b += steps.back();
    legacy += oracle::legacy_reward(path[t - 1], path[t], e_min);
  }
  const bool steps_ok = std::abs(steps[0] - 0.4) < 1e-15 && std::abs(steps[1] + 0.1) < 1e-15 &&
                        std::abs(steps[2] - 0.2) < 1e-15;
  return {a == 0.5 && steps_ok && std::abs(b - 0.5) < 1e-15 && std::abs(legacy - 0.519) <= 1e-3,
          "A " + fmt("%.17g", a) + ", B " + fmt("%.17g", b) + ", legacy B " + fmt("%.4f", legacy)};
}

Outcome curriculum_trace() {
  CurriculumHyper hp;  // xi1 0.3, delta 1e-4, kappa 10, greedy every 50, threshold 5
  const double e_min = -2.0, e_start = -0.5;
  auto cur = CurriculumState::initial(e_min, e_start, hp);

  // Hand oracle: the same rules written out directly.
  double tau = 0.3, e_low = e_start;
  int succ = 0, count = 0;
  int mismatches = 0;
  for (int ep = 0; ep < 200; ++ep) {
    // Scripted episode: energies drift down with a periodic wobble.
    const int len = 1 + ep % 4;
    bool success = false;
    for (int t = 0; t < len; ++t) {
      const double e = -0.6 - 1.3 * (1.0 - std::exp(-ep / 60.0)) + 0.05 * std::sin(ep * 0.7 + t);
      const double xi_now = e_min + tau;
      if (e < xi_now) success = true;
      cur = curriculum_update_step(cur, e);
      e_low = std::min(e_low, e);
      if (success) break;
    }
    cur = curriculum_update_episode(cur, success);
    ++count;
    if (success) ++succ;
    if (count % 50 == 0) {
      tau = std::abs(e_low - e_min) + 1e-4;
      succ = 0;
    } else if (succ > 5) {
      tau = tau - 1e-4 / 10.0;
    }
    const double xi = e_min + tau;
    if (cur.tau != tau || cur.xi != xi || cur.e_low != e_low) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatching episodes of 200, final tau " +
                               fmt("%.10g", cur.tau)};
}

Outcome negative_binomial() {
  Rng rng(303);
  const int n = 100000;
  const long r = 10;
  const double p = 0.3;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(rng.negative_binomial(r, p));
    sum += k;
    sq += k * k;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  const double ref_mean = r * p / (1 - p), ref_var = r * p / ((1 - p) * (1 - p));
  const double dm = std::abs(mean - ref_mean) / ref_mean, dv = std::abs(var - ref_var) / ref_var;
  return {dm <= 0.02 && dv <= 0.05, "mean " + fmt("%.4f", mean) + " (ref " + fmt("%.4f", ref_mean) +
                                        "), variance " + fmt("%.4f", var) + " (ref " +
                                        fmt("%.4f", ref_var) + ")"};
}

Outcome masking_soundness() {
  const auto h = fixture("lih-4");
  EnvConfig env_cfg;
  env_cfg.n_step = 12;
  env_cfg.use_external_optimizer = false;
  PolicyConfig pc;
  pc.n_qubits = h.n_qubits;
  pc.n_step = env_cfg.n_step;
  pc.hidden = {32, 32};
  pc.head_init_scale = 1.0;
  Rng rng(404);
  const auto params = PolicyParams::create(pc, rng);
  VqeEnvironment env(h, env_cfg, energy_bounds(h));
  long illegal = 0, cnot_angle = 0, stray_delta = 0, samples = 0;
  for (int state_id = 0; state_id < 8; ++state_id) {
    env.reset(rng, env_cfg.n_step);
    CurriculumState cur = CurriculumState::initial(env.bounds().e_min, env.empty_energy(), {});
    cur.xi = -1e9;
    // Random legal prefix, then many draws at that state.
    const int prefix = 1 + state_id;
    for (int t = 0; t < prefix; ++t) {
      const auto m = env.masks();
      const auto r = act(params, encode_state(env.state().circuit, pc.n_step), m, rng);
      env.step(r.action, cur);
    }
    const auto m = env.masks();
    const auto state = encode_state(env.state().circuit, pc.n_step);
    const auto ill = illegal_actions(env.state().circuit);
    for (int i = 0; i < 10000; ++i) {
      const auto r = act(params, state, m, rng);
      ++samples;
      if (std::binary_search(ill.begin(), ill.end(), r.action.disc)) ++illegal;
      if (!action_is_rotation(r.action.disc, pc.n_qubits) && r.action.init_angle) ++cnot_angle;
      for (int s = 0; s < pc.n_step; ++s) {
        const bool rot_step = s < env.state().circuit.size() &&
                              is_rotation(env.state().circuit.gate(s).gate.kind);
        if (!rot_step && r.action.deltas[static_cast<std::size_t>(s)] != 0.0) ++stray_delta;
      }
    }
  }
  return {illegal == 0 && cnot_angle == 0 && stray_delta == 0,
          std::to_string(samples) + " draws: " + std::to_string(illegal) + " illegal, " +
              std::to_string(cnot_angle) + " CNOT init angles, " + std::to_string(stray_delta) +
              " stray deltas"};
}

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  PolicyConfig pc;
  pc.n_qubits = 2;
  pc.n_step = 4;
  pc.hidden = {64, 64};
  pc.head_init_scale = 0.3;
  Rng rng(505);
  auto params = PolicyParams::create(pc, rng);

  std::vector<PolicySample> batch;
  Circuit c(2, pc.n_step);
  const double adv[] = {1.1, -0.6, 0.8, -1.3};
  for (int b = 0; b < 4; ++b) {
    MaskBundle m;
    const int a = pc.action_count();
    m.legal.assign(static_cast<std::size_t>(a), 1);
    for (int i : illegal_actions(c)) m.legal[static_cast<std::size_t>(i)] = 0;
    m.param.assign(static_cast<std::size_t>(a), 0);
    for (int i = 0; i < 6; ++i) m.param[static_cast<std::size_t>(i)] = 1;
    m.delta.assign(static_cast<std::size_t>(pc.n_step), 0);
    for (int i = 0; i < c.size(); ++i) m.delta[static_cast<std::size_t>(i)] = is_rotation(c.gate(i).gate.kind);
    const auto state = encode_state(c, pc.n_step);
    const auto r = act(params, state, m, rng);
    batch.push_back({state, r.action, m, adv[b]});
    c.append(action_gate(r.action.disc, 2, r.action.init_angle.value_or(0.0)));
  }
  const double beta = 0.02;
  const auto g = policy_gradients(params, batch, beta);
  const double eps = 1e-5;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& t : params.tensors()) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = t.offset; i < t.offset + t.size; ++i) {
      const double orig = params.data()[i];
      params.data()[i] = orig + eps;
      const double up = policy_loss(params, batch, beta);
      params.data()[i] = orig - eps;
      const double down = policy_loss(params, batch, beta);
      params.data()[i] = orig;
      const double fd = (up - down) / (2 * eps);
      num = std::max(num, std::abs(fd - g.grad[i]));
      den = std::max(den, std::abs(fd));
    }
    const double rel = den > 1e-8 ? num / den : num;
    if (rel > worst) {
      worst = rel;
      worst_name = t.name;
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 120.0, "max relative error " + fmt("%.2e", worst) + " (" + worst_name +
                                          "), " + std::to_string(params.data().size()) +
                                          " parameters, " + fmt("%.1f", t) + " s"};
}

Outcome discount_schedule() {
  long double worst = 0.0L;
  for (double gf : {0.95, 0.99, 0.9, 0.5}) {
    for (int T = 1; T <= 64; ++T) {
      worst = std::max(worst, std::abs(std::pow(discount_factor(T, gf), T) - static_cast<long double>(gf)));
    }
  }
  return {worst <= 1e-15L, "max |gamma^T - gamma_final| " + fmt("%.2e", static_cast<double>(worst))};
}

Outcome optimizer_checks() {
  OptimizerConfig nm;
  nm.algorithm = OptimizerAlgorithm::NelderMead;
  nm.max_evals = 2000;
  nm.final_step = 1e-9;
  nm.convergence_tol = 1e-16;
  const auto rb = minimize(
      [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
      },
      {-1.2, 1.0}, nm);

  const auto h = fixture("toy-2");
  Circuit c(2, 3);
  c.append(GateSpec::rotation(GateKind::RY, 0, 0.0));
  c.append(GateSpec::cnot(0, 1));
  c.append(GateSpec::rotation(GateKind::RY, 1, 0.0));
  const Objective f = [&](std::span<const double> x) { return circuit_energy(c, h, x); };
  double grid = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 360; ++i) {
    for (int j = 0; j < 360; ++j) {
      const double x[2] = {2 * std::numbers::pi * i / 360, 2 * std::numbers::pi * j / 360};
      grid = std::min(grid, f(x));
    }
  }
  OptimizerConfig cob;
  cob.max_evals = 1000;
  const auto an = minimize(f, {0.1, 0.1}, cob);
  const double gap = std::abs(an.best_value - grid);
  return {rb.best_value <= 1e-6 && rb.n_evals <= 2000 && gap <= 1e-4,
          "Rosenbrock f " + fmt("%.2e", rb.best_value) + " in " + std::to_string(rb.n_evals) +
              " evals (Nelder-Mead); ansatz gap to grid " + fmt("%.2e", gap)};
}

Outcome desk_training() {
  const auto t0 = std::chrono::steady_clock::now();
  auto run = [](const Hamiltonian& h, int episodes) {
    RunConfig rc;
    rc.train.seed = 2025;
    rc.train.episodes_total = episodes;
    bind_to_hamiltonian(rc, h);
    return train(rc.train, h, rc.env, rc.policy);
  };
  const auto toy = fixture("toy-2");
  const auto h2 = fixture("h2-4");
  const auto a = run(toy, 300);
  const auto b = run(h2, 2000);
  const double t = seconds_since(t0);
  return {a.best_error <= 1e-4 && b.best_error <= 1.6e-3,
          "toy best error " + fmt("%.2e", a.best_error) + ", H2 best error " + fmt("%.2e", b.best_error) +
              ", " + fmt("%.1f", t) + " s"};
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + kCli + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome warm_start_effect() {
  const auto dir = scratch("warm");
  const std::string cfg = kData + "/configs/toy-warmstart.json";
  if (run_cli("train --hamiltonian " + kData + "/hamiltonians/toy-2.json --config " + cfg +
              " --seed 2025 --out " + (dir / "train").string()) != 0 ||
      run_cli("eval --checkpoint " + (dir / "train" / "final.ckpt").string() +
              " --init-mode both --rollouts 500 --seed 7 --out " + (dir / "eval").string()) != 0) {
    return {false, "CLI run failed"};
  }
  const auto warm = read_eval_csv(dir / "eval" / "eval_warm.csv");
  const auto zero = read_eval_csv(dir / "eval" / "eval_zero.csv");
  std::vector<double> ew, ez, xw, xz;
  for (const auto& r : warm) {
    ew.push_back(r.optimizer_evals);
    xw.push_back(r.energy);
  }
  for (const auto& r : zero) {
    ez.push_back(r.optimizer_evals);
    xz.push_back(r.energy);
  }
  const double mw = summarize(ew).mean, mz = summarize(ez).mean;
  const auto sign = sign_test_less(ew, ez);
  const auto ks = ks_two_sample(xw, xz);

  Rng rng(606);
  int exact = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> u(1 + rng.index(40)), v(1 + rng.index(40));
    for (double& s : u) s = std::round(rng.normal() * 8) / 8;
    for (double& s : v) s = std::round(rng.normal(0.2, 1.3) * 8) / 8;
    exact += ks_two_sample(u, v).d == oracle::ks_brute_force(u, v);
  }
  return {warm.size() == 500 && mw < mz && sign.p < 0.05 && exact == 50,
          "mean evals warm " + fmt("%.2f", mw) + " vs zero " + fmt("%.2f", mz) + ", sign test " +
              std::to_string(sign.n_less) + ":" + std::to_string(sign.n_greater) + " p=" +
              fmt("%.2e", sign.p) + "; energy KS D=" + fmt("%.4f", ks.d) + " p=" + fmt("%.3g", ks.p) +
              "; KS oracle " + std::to_string(exact) + "/50 exact"};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

Outcome reproducibility() {
  const auto base = scratch("repro");
  const std::string ham = kData + "/hamiltonians/h2-4.json";
  const std::string cfg = (base / "cfg.json").string();
  {
    std::ofstream f(cfg);
    f << R"({"train": {"episodes_total": 48, "checkpoint_every": 2}, "env": {"n_step": 10},
             "optimizer": {"max_evals": 40}, "policy": {"hidden": [32, 32]},
             "eval_optimizer": {"max_evals": 100}})";
  }
  auto pipeline = [&](const fs::path& d, const std::string& threads) {
    const std::string env = "HYQAS_THREADS=" + threads;
    const std::string t = (d / "train").string();
    int rc = 0;
    rc |= run_cli("train --hamiltonian " + ham + " --config " + cfg + " --seed 11 --out " + t, env);
    rc |= run_cli("eval --checkpoint " + t + "/best.ckpt --init-mode both --rollouts 24 --seed 3 --out " +
                      (d / "eval").string(), env);
    rc |= run_cli("init-study --circuit " + t + "/best_circuit.json --hamiltonian " + ham +
                      " --runs 6 --seed 5 --max-evals 80 --out " + (d / "init").string(), env);
    rc |= run_cli("ablate --variant bsuite --hamiltonian " + ham + " --config " + cfg +
                      " --seed 11 --episodes 16 --rollouts 8 --out " + (d / "ablate").string(), env);
    rc |= run_cli("ks-compare --a " + (d / "eval" / "eval_warm.csv").string() + " --b " +
                      (d / "eval" / "eval_zero.csv").string() + " --out " + (d / "ks.csv").string(), env);
    rc |= run_cli("report --in " + (d / "eval").string() + " --format csv", env);
    rc |= run_cli("report --in " + (d / "eval").string() + " --format svg", env);
    return rc;
  };
  if (pipeline(base / "a", "1") != 0 || pipeline(base / "b", "4") != 0 || pipeline(base / "c", "4") != 0) {
    return {false, "CLI run failed"};
  }
  const auto a = snapshot(base / "a"), b = snapshot(base / "b"), c = snapshot(base / "c");
  int differ = 0;
  std::string first;
  for (const auto& [name, text] : a) {
    const bool same = b.count(name) && c.count(name) && b.at(name) == text && c.at(name) == text;
    if (!same) {
      ++differ;
      if (first.empty()) first = name;
    }
  }
  const bool ok = differ == 0 && a.size() == b.size() && a.size() == c.size() && a.size() > 10;
  return {ok, std::to_string(a.size()) + " files compared across 1/4/4 threads, " +
                  std::to_string(differ) + " differ" + (first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"simulator matches dense oracle", simulator_oracle},
      {"variational bound on fixtures", variational_bound},
      {"reward case study", reward_case_study},
      {"curriculum trace", curriculum_trace},
      {"negative-binomial halting", negative_binomial},
      {"masking soundness", masking_soundness},
      {"policy gradient check", gradient_check},
      {"discount schedule", discount_schedule},
      {"derivative-free optimizer", optimizer_checks},
      {"desk-scale training", desk_training},
      {"warm-start effect", warm_start_effect},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
