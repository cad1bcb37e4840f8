#include "hyqas/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hyqas {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoHybrid: return "no_hybrid";
    case Variant::NoRefine: return "no_refine";
    case Variant::NoExternalOpt: return "no_external_opt";
  }
  return "?";
}

Variant variant_from_name(std::string_view name) {
  if (name == "full") return Variant::Full;
  if (name == "no_hybrid") return Variant::NoHybrid;
  if (name == "no_refine") return Variant::NoRefine;
  if (name == "no_external_opt") return Variant::NoExternalOpt;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

EnvConfig variant_env_config(EnvConfig cfg, Variant v) {
  if (v == Variant::NoExternalOpt) cfg.use_external_optimizer = false;
  return cfg;
}

MaskBundle variant_masks(MaskBundle m, Variant v) {
  switch (v) {
    case Variant::NoHybrid: return restrict_masks(std::move(m), false, false);
    case Variant::NoRefine: return restrict_masks(std::move(m), true, false);
    default: return m;
  }
}

void TrainConfig::validate() const {
  if (episodes_total < 1) throw std::invalid_argument("TrainConfig: episodes_total must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (!(gamma_final > 0.0 && gamma_final <= 1.0)) {
    throw std::invalid_argument("TrainConfig: gamma_final must lie in (0, 1]");
  }
  if (!(entropy_beta >= 0.0)) throw std::invalid_argument("TrainConfig: entropy_beta must be >= 0");
  if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 0");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("TrainConfig: grad_clip must be > 0");
}

double Trajectory::reward_sum() const {
  double s = 0.0;
  for (const auto& st : steps) s += st.reward;
  return s;
}

long double discount_factor(int T, double gamma_final) {
  if (!(gamma_final > 0.0 && gamma_final <= 1.0)) {
    throw std::invalid_argument("gamma_final must lie in (0, 1]");
  }
  if (T < 1) throw std::invalid_argument("discount horizon must be >= 1");
  return std::pow(static_cast<long double>(gamma_final), 1.0L / static_cast<long double>(T));
}

std::vector<double> returns_to_go(std::span<const double> rewards, int T, double gamma_final) {
  const long double gamma = discount_factor(T, gamma_final);
  if (static_cast<int>(rewards.size()) > T) throw std::invalid_argument("more rewards than T");
  std::vector<double> out(rewards.size());
  long double acc = 0.0L;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = static_cast<double>(acc);
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns) {
  if (returns.empty()) throw std::invalid_argument("advantages: empty batch");
  const double n = static_cast<double>(returns.size());
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> a(returns.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (returns[i] - mean) / (sd + 1e-8);
  return a;
}

namespace {

Trajectory rollout_impl(const PolicyParams& params, VqeEnvironment& env, CurriculumState& cur,
                        Rng& rng, Variant variant, bool greedy) {
  Trajectory tr;
  CircuitTensorState s = env.reset(rng);
  tr.cap = env.state().episode_cap;
  for (;;) {
    MaskBundle m = variant_masks(env.masks(), variant);
    TrajectoryStep st;
    if (greedy) {
      st.action = act_greedy(params, s, m);
    } else {
      ActResult a = act(params, s, m, rng);
      st.action = std::move(a.action);
      st.log_prob = a.log_prob;
    }
    StepOutcome o = env.step(st.action, cur);
    st.state = std::move(s);
    st.masks = std::move(m);
    st.reward = o.reward;
    st.energy = o.energy;
    st.agent_energy = o.agent_energy;
    st.optimizer_evals = o.optimizer_evals;
    tr.steps.push_back(std::move(st));
    s = std::move(o.observation);
    if (o.done) {
      tr.final_energy = o.energy;
      tr.succeeded = o.succeeded;
      tr.optimized_params = std::move(o.optimized_params);
      break;
    }
  }
  tr.circuit = env.state().circuit;
  tr.metrics = circuit_metrics(tr.circuit);
  tr.error = std::abs(tr.final_energy - env.bounds().e_exact);
  return tr;
}

}  // namespace

Trajectory rollout(const PolicyParams& params, VqeEnvironment& env, CurriculumState& cur, Rng& rng,
                   Variant variant, std::optional<double> exact_energy) {
  Trajectory tr = rollout_impl(params, env, cur, rng, variant, false);
  if (exact_energy) tr.error = std::abs(tr.final_energy - *exact_energy);
  return tr;
}

int worker_threads() {
  if (const char* env = std::getenv("HYQAS_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto run = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (threads == 1) {
    for (int i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

nlohmann::json curriculum_to_json(const CurriculumState& c) {
  return {{"e_min", c.e_min},
          {"tau", c.tau},
          {"xi", c.xi},
          {"e_low", c.e_low},
          {"success_count", c.success_count},
          {"episode_count", c.episode_count},
          {"xi1", c.hyper.xi1},
          {"delta", c.hyper.delta},
          {"kappa", c.hyper.kappa},
          {"greedy_every", c.hyper.greedy_every},
          {"success_threshold", c.hyper.success_threshold}};
}

CurriculumState curriculum_from_json(const nlohmann::json& j) {
  CurriculumState c;
  c.e_min = j.at("e_min").get<double>();
  c.tau = j.at("tau").get<double>();
  c.xi = j.at("xi").get<double>();
  c.e_low = j.at("e_low").get<double>();
  c.success_count = j.at("success_count").get<int>();
  c.episode_count = j.at("episode_count").get<int>();
  c.hyper.xi1 = j.at("xi1").get<double>();
  c.hyper.delta = j.at("delta").get<double>();
  c.hyper.kappa = j.at("kappa").get<double>();
  c.hyper.greedy_every = j.at("greedy_every").get<int>();
  c.hyper.success_threshold = j.at("success_threshold").get<int>();
  return c;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string train_log_header() {
  return "episode,update,cap,steps,reward_sum,final_energy,error,xi,tau,succeeded,params,depth,gates,"
         "optimizer_evals,loss";
}

std::string format_train_log_row(const TrainLogRow& r) {
  std::ostringstream os;
  os << r.episode << ',' << r.update << ',' << r.cap << ',' << r.steps << ','
     << format_double(r.reward_sum) << ',' << format_double(r.final_energy) << ','
     << format_double(r.error) << ',' << format_double(r.xi) << ',' << format_double(r.tau) << ','
     << (r.succeeded ? 1 : 0) << ',' << r.metrics.params << ',' << r.metrics.depth << ','
     << r.metrics.gates << ',' << r.optimizer_evals << ',' << format_double(r.loss);
  return os.str();
}

double apply_update(PolicyParams& params, std::vector<double> grad, const TrainConfig& cfg,
                    UpdaterState& state) {
  auto& w = params.data();
  if (grad.size() != w.size()) throw std::invalid_argument("gradient size mismatch");
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw std::runtime_error("non-finite gradient norm");
  if (norm > cfg.grad_clip) {
    const double s = cfg.grad_clip / norm;
    for (double& g : grad) g *= s;
  }
  if (!cfg.adam) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * grad[i];
    return norm;
  }
  const AdamConfig& a = *cfg.adam;
  if (state.m.size() != w.size()) {
    state.m.assign(w.size(), 0.0);
    state.v.assign(w.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < w.size(); ++i) {
    state.m[i] = a.beta1 * state.m[i] + (1.0 - a.beta1) * grad[i];
    state.v[i] = a.beta2 * state.v[i] + (1.0 - a.beta2) * grad[i] * grad[i];
    const double mh = state.m[i] / c1;
    const double vh = state.v[i] / c2;
    w[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + a.eps);
  }
  return norm;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string episode_log_header() {
  return "seed,episode,t,L,disc,gate,init_angle,delta_l1,agent_energy,energy,reward,xi,tau,"
         "optimizer_evals";
}

void append_episode_log(std::ostream& os, std::uint64_t seed, const Trajectory& tr, double xi,
                        double tau, int n_qubits) {
  for (std::size_t t = 0; t < tr.steps.size(); ++t) {
    const auto& st = tr.steps[t];
    const GateSpec g = action_gate(st.action.disc, n_qubits);
    std::string gate = gate_kind_name(g.kind);
    gate += ':' + std::to_string(g.qubit);
    if (g.qubit2) gate += ':' + std::to_string(*g.qubit2);
    double l1 = 0.0;
    for (double d : st.action.deltas) l1 += std::abs(d);
    os << seed << ',' << tr.episode << ',' << t << ',' << tr.cap << ',' << st.action.disc << ','
       << gate << ',' << (st.action.init_angle ? format_double(*st.action.init_angle) : "") << ','
       << format_double(l1) << ',' << format_double(st.agent_energy) << ','
       << format_double(st.energy) << ',' << format_double(st.reward) << ',' << format_double(xi)
       << ',' << format_double(tau) << ',' << st.optimizer_evals << '\n';
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Hamiltonian& h, const EnvConfig& env_cfg,
                  const PolicyConfig& policy_cfg, const TrainHooks& hooks) {
  cfg.validate();
  const EnvConfig ecfg = variant_env_config(env_cfg, cfg.variant);
  ecfg.validate();
  if (policy_cfg.n_qubits != h.n_qubits || policy_cfg.n_step != ecfg.n_step) {
    throw std::invalid_argument("policy config does not match the Hamiltonian width or n_step");
  }
  const EnergyBounds bounds = energy_bounds(h);
  const int threads = hooks.threads > 0 ? hooks.threads : worker_threads();

  Rng init_rng(derive_seed(cfg.seed, std::numeric_limits<std::uint64_t>::max()));
  TrainResult res;
  res.final_params = PolicyParams::create(policy_cfg, init_rng);
  res.best_params = res.final_params;
  res.best_error = std::numeric_limits<double>::infinity();
  {
    const VqeEnvironment probe(h, ecfg, bounds);
    res.curriculum = CurriculumState::initial(bounds.e_min, probe.empty_energy(), cfg.curriculum);
  }

  const bool write = !hooks.out_dir.empty();
  std::ofstream log_os, ep_os;
  if (write) {
    std::filesystem::create_directories(hooks.out_dir);
    log_os.open(hooks.out_dir / "train_log.csv", std::ios::binary | std::ios::trunc);
    ep_os.open(hooks.out_dir / "episode_log.csv", std::ios::binary | std::ios::trunc);
    if (!log_os || !ep_os) throw std::runtime_error("cannot open logs in " + hooks.out_dir.string());
    log_os << train_log_header() << '\n';
    ep_os << episode_log_header() << '\n';
  }
  auto metadata = [&](int episodes_done) {
    nlohmann::json m = hooks.extra_metadata;
    m.update(nlohmann::json{{"seed", cfg.seed},
                          {"update", res.updates},
                          {"episodes_done", episodes_done},
                          {"variant", variant_name(cfg.variant)},
                          {"hamiltonian", h.name},
                          {"curriculum", curriculum_to_json(res.curriculum)}});
    return m;
  };

  UpdaterState upd;
  for (int ep0 = 0; ep0 < cfg.episodes_total; ep0 += cfg.batch_size) {
    const int nb = std::min(cfg.batch_size, cfg.episodes_total - ep0);
    const PolicyParams& snapshot = res.final_params;
    const CurriculumState cur0 = res.curriculum;
    std::vector<Trajectory> trajs(static_cast<std::size_t>(nb));
    parallel_for(nb, threads, [&](int i) {
      VqeEnvironment env(h, ecfg, bounds);
      CurriculumState local = cur0;
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(ep0 + i)));
      Trajectory tr = rollout_impl(snapshot, env, local, rng, cfg.variant, false);
      tr.episode = ep0 + i;
      trajs[static_cast<std::size_t>(i)] = std::move(tr);
    });

    // Returns and batch-normalized advantages.
    std::vector<double> all_returns;
    for (const auto& tr : trajs) {
      std::vector<double> rewards;
      for (const auto& st : tr.steps) rewards.push_back(st.reward);
      const auto r = returns_to_go(rewards, tr.cap, cfg.gamma_final);
      all_returns.insert(all_returns.end(), r.begin(), r.end());
    }
    const std::vector<double> adv = advantages(all_returns);
    const std::size_t total_steps = adv.size();

    std::vector<std::vector<PolicySample>> samples(trajs.size());
    {
      std::size_t k = 0;
      for (std::size_t i = 0; i < trajs.size(); ++i) {
        for (const auto& st : trajs[i].steps) {
          samples[i].push_back({st.state, st.action, st.masks, adv[k++]});
        }
      }
    }
    std::vector<PolicyGradient> parts(trajs.size());
    parallel_for(nb, threads, [&](int i) {
      parts[static_cast<std::size_t>(i)] =
          policy_gradients(snapshot, samples[static_cast<std::size_t>(i)], cfg.entropy_beta);
    });
    std::vector<double> grad(snapshot.data().size(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double w = static_cast<double>(samples[i].size()) / static_cast<double>(total_steps);
      loss += w * parts[i].loss;
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += w * parts[i].grad[j];
    }

    // Ordered curriculum replay and logging.
    for (const auto& tr : trajs) {
      TrainLogRow row;
      row.episode = tr.episode;
      row.update = res.updates;
      row.cap = tr.cap;
      row.steps = static_cast<int>(tr.steps.size());
      row.reward_sum = tr.reward_sum();
      row.final_energy = tr.final_energy;
      row.error = tr.error;
      row.xi = res.curriculum.xi;
      row.tau = res.curriculum.tau;
      row.succeeded = tr.succeeded;
      row.metrics = tr.metrics;
      for (const auto& st : tr.steps) row.optimizer_evals += st.optimizer_evals;
      row.loss = loss;
      if (write) {
        log_os << format_train_log_row(row) << '\n';
        append_episode_log(ep_os, cfg.seed, tr, row.xi, row.tau, h.n_qubits);
      }
      res.log.push_back(row);

      for (const auto& st : tr.steps) res.curriculum = curriculum_update_step(res.curriculum, st.energy);
      res.curriculum = curriculum_update_episode(res.curriculum, tr.succeeded);

      if (tr.error < res.best_error) {
        res.best_error = tr.error;
        res.best_episode = tr.episode;
        res.best_circuit = tr.circuit;
        res.best_optimized_params = tr.optimized_params;
        if (cfg.retain_best) res.best_params = snapshot;
      }
    }
    if (write) {
      log_os.flush();
      ep_os.flush();
    }

    if (!std::isfinite(loss)) {
      if (write) save_checkpoint(hooks.out_dir / "last_good.ckpt", res.final_params, metadata(ep0));
      throw std::runtime_error("non-finite policy loss at update " + std::to_string(res.updates));
    }
    apply_update(res.final_params, std::move(grad), cfg, upd);
    ++res.updates;

    const int done = ep0 + nb;
    if (write && cfg.checkpoint_every > 0 && res.updates % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06d.ckpt", res.updates);
      save_checkpoint(hooks.out_dir / name, res.final_params, metadata(done));
    }
    if (hooks.on_update) hooks.on_update(res.updates, done, res);
  }
  if (!cfg.retain_best) res.best_params = res.final_params;

  if (write) {
    auto meta = metadata(cfg.episodes_total);
    save_checkpoint(hooks.out_dir / "final.ckpt", res.final_params, meta);
    meta["best_error"] = res.best_error;
    meta["best_episode"] = res.best_episode;
    save_checkpoint(hooks.out_dir / "best.ckpt", res.best_params, meta);
    nlohmann::json state{{"seed", cfg.seed},
                         {"episodes_done", cfg.episodes_total},
                         {"updates", res.updates},
                         {"next_episode_stream", cfg.episodes_total},
                         {"adam_step", upd.step},
                         {"best_error", res.best_error},
                         {"best_episode", res.best_episode},
                         {"curriculum", curriculum_to_json(res.curriculum)}};
    write_text(hooks.out_dir / "trainer_state.json", state.dump(2) + "\n");
    write_text(hooks.out_dir / "best_circuit.json", serialize_circuit(res.best_circuit) + "\n");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation

const char* init_mode_name(InitMode m) { return m == InitMode::Warm ? "warm" : "zero"; }

InitMode init_mode_from_name(std::string_view name) {
  if (name == "warm") return InitMode::Warm;
  if (name == "zero") return InitMode::Zero;
  throw std::invalid_argument("unknown init mode '" + std::string(name) + "'");
}

namespace {

EvalRecord finish(const Circuit& c, const Hamiltonian& h, const EnergyBounds& bounds,
                  std::vector<double> x0, const EvalConfig& cfg, bool optimize) {
  EvalRecord r;
  const CircuitMetrics m = circuit_metrics(c);
  r.params = m.params;
  r.depth = m.depth;
  r.gates = m.gates;
  if (optimize) {
    const OptimizeResult o = minimize(
        [&c, &h](std::span<const double> x) { return circuit_energy(c, h, x); }, std::move(x0),
        cfg.final_optimizer);
    r.energy = o.best_value;
    r.optimizer_evals = o.n_evals;
  } else {
    r.energy = circuit_energy(c, h, x0);
  }
  r.error = std::abs(r.energy - bounds.e_exact);
  return r;
}

std::vector<PairedEvalRecord> evaluate_impl(const PolicyParams& params, const Hamiltonian& h,
                                            const EnvConfig& env_cfg, const EvalConfig& cfg,
                                            bool want_warm, bool want_zero) {
  if (cfg.n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");
  cfg.final_optimizer.validate();
  const EnvConfig ecfg = variant_env_config(env_cfg, cfg.variant);
  const EnergyBounds bounds = energy_bounds(h);
  const bool optimize = ecfg.use_external_optimizer;
  CurriculumState cur0;
  if (cfg.curriculum) {
    cur0 = *cfg.curriculum;
  } else {
    const VqeEnvironment probe(h, ecfg, bounds);
    cur0 = CurriculumState::initial(bounds.e_min, probe.empty_energy(), {});
  }
  std::vector<PairedEvalRecord> out(static_cast<std::size_t>(cfg.n_rollouts));
  const int threads = cfg.threads > 0 ? cfg.threads : worker_threads();
  parallel_for(cfg.n_rollouts, threads, [&](int i) {
    VqeEnvironment env(h, ecfg, bounds);
    CurriculumState cur = cur0;
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    const Trajectory tr = rollout_impl(params, env, cur, rng, cfg.variant, cfg.greedy);
    auto& rec = out[static_cast<std::size_t>(i)];
    if (want_warm) rec.warm = finish(tr.circuit, h, bounds, tr.circuit.parameters(), cfg, optimize);
    if (want_zero) {
      rec.zero = finish(tr.circuit, h, bounds,
                        std::vector<double>(static_cast<std::size_t>(tr.circuit.param_count()), 0.0),
                        cfg, optimize);
    }
    for (EvalRecord* r : {&rec.warm, &rec.zero}) {
      r->seed = cfg.seed;
      r->rollout = i;
    }
  });
  return out;
}

}  // namespace

std::vector<EvalRecord> evaluate_policy(const PolicyParams& params, const Hamiltonian& h,
                                        const EnvConfig& env_cfg, InitMode mode,
                                        const EvalConfig& cfg) {
  const bool warm = mode == InitMode::Warm;
  const auto paired = evaluate_impl(params, h, env_cfg, cfg, warm, !warm);
  std::vector<EvalRecord> out;
  out.reserve(paired.size());
  for (const auto& p : paired) out.push_back(warm ? p.warm : p.zero);
  return out;
}

std::vector<PairedEvalRecord> evaluate_policy_paired(const PolicyParams& params,
                                                     const Hamiltonian& h,
                                                     const EnvConfig& env_cfg,
                                                     const EvalConfig& cfg) {
  return evaluate_impl(params, h, env_cfg, cfg, true, true);
}

std::string eval_csv_header() { return "seed,rollout,error,params,depth,gates,optimizer_evals,energy"; }

std::string format_eval_row(const EvalRecord& r) {
  std::ostringstream os;
  os << r.seed << ',' << r.rollout << ',' << format_double(r.error) << ',' << r.params << ','
     << r.depth << ',' << r.gates << ',' << r.optimizer_evals << ',' << format_double(r.energy);
  return os.str();
}

}  // namespace hyqas
