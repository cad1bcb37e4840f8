#include "hyqas/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hyqas {

SummaryStats summarize(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
  SummaryStats s;
  s.n = static_cast<int>(xs.size());
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = std::clamp(sum / s.n, s.min, s.max);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

double error_reduction(double e_b3, double e_bi) {
  if (!(e_b3 > 0.0)) throw std::invalid_argument("error_reduction: reference error must be > 0");
  return (e_b3 - e_bi) / e_b3 * 100.0;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double p;
  if (lambda < 1.18) {
    // Jacobi theta form, accurate where the alternating series converges slowly.
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double m = 2.0 * k - 1.0;
      s += std::exp(-m * m * c);
    }
    p = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  } else {
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      s += (k % 2 == 1 ? term : -term);
    }
    p = 2.0 * s;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.d = d;
  r.p = d == 0.0 ? 1.0 : kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * d);
  return r;
}

SignTestResult sign_test_less(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sign test: samples must be paired");
  SignTestResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) {
      ++r.n_less;
    } else if (a[i] > b[i]) {
      ++r.n_greater;
    } else {
      ++r.n_ties;
    }
  }
  const int n = r.n_less + r.n_greater;
  if (n == 0) return r;
  double p = 0.0;
  const double ln2 = std::log(2.0);
  for (int k = r.n_less; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * ln2);
  }
  r.p = std::min(p, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// Ablations

namespace {

AblationRow make_row(std::string id, Variant v, InitMode mode, std::span<const EvalRecord> recs,
                     double train_best) {
  AblationRow r;
  r.id = std::move(id);
  r.variant = variant_name(v);
  r.init = init_mode_name(mode);
  std::vector<double> errors;
  for (const auto& e : recs) {
    errors.push_back(e.error);
    r.mean_params += e.params;
    r.mean_depth += e.depth;
    r.mean_gates += e.gates;
    r.mean_evals += e.optimizer_evals;
  }
  const double n = static_cast<double>(recs.size());
  r.mean_params /= n;
  r.mean_depth /= n;
  r.mean_gates /= n;
  r.mean_evals /= n;
  r.error = summarize(errors);
  r.best_error = std::min(r.error.min, train_best);
  return r;
}

TrainResult train_variant(const ExperimentContext& ctx, Variant v) {
  TrainConfig t = ctx.train;
  t.variant = v;
  TrainHooks hooks;
  if (!ctx.out_dir.empty()) hooks.out_dir = ctx.out_dir / variant_name(v);
  hooks.threads = ctx.eval.threads;
  return train(t, ctx.hamiltonian, ctx.env, ctx.policy, hooks);
}

EvalConfig eval_for(const ExperimentContext& ctx, Variant v, const TrainResult& tr) {
  EvalConfig e = ctx.eval;
  e.variant = v;
  e.curriculum = tr.curriculum;
  return e;
}

}  // namespace

std::vector<AblationRow> run_ablation(const ExperimentContext& ctx, std::span<const Variant> variants) {
  std::vector<AblationRow> rows;
  for (Variant v : variants) {
    const TrainResult tr = train_variant(ctx, v);
    const auto recs =
        evaluate_policy(tr.best_params, ctx.hamiltonian, ctx.env, InitMode::Warm, eval_for(ctx, v, tr));
    if (!ctx.out_dir.empty()) {
      write_eval_csv(ctx.out_dir / variant_name(v) / "eval_warm.csv", recs);
    }
    rows.push_back(make_row(variant_name(v), v, InitMode::Warm, recs, tr.best_error));
  }
  if (!ctx.out_dir.empty()) write_ablation_csv(ctx.out_dir / "ablation.csv", rows);
  return rows;
}

std::vector<AblationRow> run_bsuite(const ExperimentContext& ctx) {
  const TrainResult full = train_variant(ctx, Variant::Full);
  const auto paired = evaluate_policy_paired(full.best_params, ctx.hamiltonian, ctx.env,
                                             eval_for(ctx, Variant::Full, full));
  std::vector<EvalRecord> warm, zero;
  for (const auto& p : paired) {
    warm.push_back(p.warm);
    zero.push_back(p.zero);
  }
  const TrainResult disc = train_variant(ctx, Variant::NoHybrid);
  const auto b3 = evaluate_policy(disc.best_params, ctx.hamiltonian, ctx.env, InitMode::Zero,
                                  eval_for(ctx, Variant::NoHybrid, disc));

  // B1/B2 share one set of circuits, so the retained training error applies to neither init mode.
  std::vector<AblationRow> rows;
  rows.push_back(make_row("B1", Variant::Full, InitMode::Warm, warm, std::numeric_limits<double>::infinity()));
  rows.push_back(make_row("B2", Variant::Full, InitMode::Zero, zero, std::numeric_limits<double>::infinity()));
  rows.push_back(make_row("B3", Variant::NoHybrid, InitMode::Zero, b3, std::numeric_limits<double>::infinity()));
  const double ref = rows[2].best_error;
  if (ref > 0.0) {
    rows[0].er_percent = error_reduction(ref, rows[0].best_error);
    rows[1].er_percent = error_reduction(ref, rows[1].best_error);
    rows[2].er_percent = 0.0;
  }
  if (!ctx.out_dir.empty()) {
    std::filesystem::create_directories(ctx.out_dir);
    write_eval_csv(ctx.out_dir / "eval_warm.csv", warm);
    write_eval_csv(ctx.out_dir / "eval_zero.csv", zero);
    write_eval_csv(ctx.out_dir / "eval_b3.csv", b3);
    write_ablation_csv(ctx.out_dir / "bsuite.csv", rows);
  }
  return rows;
}

std::string ablation_csv_header() {
  return "id,variant,init,best_error,mean_error,std_error,min_error,max_error,n,mean_params,"
         "mean_depth,mean_gates,mean_optimizer_evals,er_percent";
}

std::string format_ablation_row(const AblationRow& r) {
  std::ostringstream os;
  os << r.id << ',' << r.variant << ',' << r.init << ',' << format_double(r.best_error) << ','
     << format_double(r.error.mean) << ',' << format_double(r.error.std) << ','
     << format_double(r.error.min) << ',' << format_double(r.error.max) << ',' << r.error.n << ','
     << format_double(r.mean_params) << ',' << format_double(r.mean_depth) << ','
     << format_double(r.mean_gates) << ',' << format_double(r.mean_evals) << ','
     << (r.er_percent ? format_double(*r.er_percent) : "");
  return os.str();
}

// ---------------------------------------------------------------------------
// Initialization sensitivity

const char* init_strategy_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::NearZero: return "near_zero";
    case InitStrategy::Random: return "random";
    case InitStrategy::NearRandom: return "near_random";
  }
  return "?";
}

InitStrategy init_strategy_from_name(std::string_view name) {
  if (name == "near_zero") return InitStrategy::NearZero;
  if (name == "random") return InitStrategy::Random;
  if (name == "near_random") return InitStrategy::NearRandom;
  throw std::invalid_argument("unknown init strategy '" + std::string(name) + "'");
}

std::vector<double> initial_angles(InitStrategy s, int n_params, const InitStudyConfig& cfg, int run) {
  const auto n = static_cast<std::size_t>(n_params);
  const auto sid = static_cast<std::uint64_t>(s);
  Rng rng(derive_seed(derive_seed(cfg.seed, sid), static_cast<std::uint64_t>(run)));
  std::vector<double> x(n, 0.0);
  switch (s) {
    case InitStrategy::NearZero:
      for (double& v : x) v = rng.normal(0.0, cfg.sigma);
      break;
    case InitStrategy::Random:
      for (double& v : x) v = rng.uniform(-std::numbers::pi, std::numbers::pi);
      break;
    case InitStrategy::NearRandom: {
      Rng base(cfg.per_run_base ? derive_seed(derive_seed(cfg.seed, 100 + sid), static_cast<std::uint64_t>(run))
                                : derive_seed(cfg.seed, 100 + sid));
      for (double& v : x) v = base.uniform(-std::numbers::pi, std::numbers::pi);
      for (double& v : x) v += rng.normal(0.0, cfg.sigma);
      break;
    }
  }
  return x;
}

InitStudyResult run_init_sensitivity(const Circuit& circuit, const Hamiltonian& h,
                                     const InitStudyConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("init study: runs must be >= 1");
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("init study: sigma must be >= 0");
  cfg.optimizer.validate();
  InitStudyResult res;
  res.degenerate = circuit.param_count() == 0;
  const int per = cfg.runs;
  const int total = per * static_cast<int>(cfg.strategies.size());
  res.runs.resize(static_cast<std::size_t>(total));
  const int threads = cfg.threads > 0 ? cfg.threads : worker_threads();
  parallel_for(total, threads, [&](int k) {
    const InitStrategy s = cfg.strategies[static_cast<std::size_t>(k / per)];
    const int run = k % per;
    const auto x0 = initial_angles(s, circuit.param_count(), cfg, run);
    const OptimizeResult o = minimize(
        [&](std::span<const double> x) { return circuit_energy(circuit, h, x); }, x0, cfg.optimizer);
    res.runs[static_cast<std::size_t>(k)] = {s, run, o.best_value, o.n_evals};
  });
  for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
    std::vector<double> e;
    for (int r = 0; r < per; ++r) e.push_back(res.runs[si * static_cast<std::size_t>(per) + static_cast<std::size_t>(r)].final_energy);
    res.stats.emplace_back(cfg.strategies[si], summarize(e));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("non-numeric value '" + s + "' in " + path.string());
  }
  if (used != s.size()) throw std::runtime_error("non-numeric value '" + s + "' in " + path.string());
  return v;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

}  // namespace

void write_eval_csv(const std::filesystem::path& path, std::span<const EvalRecord> records) {
  auto os = open_out(path);
  os << eval_csv_header() << '\n';
  for (const auto& r : records) os << format_eval_row(r) << '\n';
}

std::vector<EvalRecord> read_eval_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty() || rows[0] != split(eval_csv_header())) {
    throw std::runtime_error(path.string() + " is not an eval CSV");
  }
  std::vector<EvalRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& c = rows[i];
    if (c.size() != 8) throw std::runtime_error("malformed eval row in " + path.string());
    EvalRecord r;
    r.seed = std::stoull(c[0]);
    r.rollout = std::stoi(c[1]);
    r.error = to_double(c[2], path);
    r.params = std::stoi(c[3]);
    r.depth = std::stoi(c[4]);
    r.gates = std::stoi(c[5]);
    r.optimizer_evals = std::stoi(c[6]);
    r.energy = to_double(c[7], path);
    out.push_back(r);
  }
  return out;
}

void write_init_study_csv(const std::filesystem::path& path, const InitStudyResult& r) {
  auto os = open_out(path);
  os << "strategy,run,final_energy\n";
  for (const auto& run : r.runs) {
    os << init_strategy_name(run.strategy) << ',' << run.run << ',' << format_double(run.final_energy) << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, SummaryStats>>& rows) {
  auto os = open_out(path);
  os << "name,mean,std,min,max,n\n";
  for (const auto& [name, s] : rows) {
    os << name << ',' << format_double(s.mean) << ',' << format_double(s.std) << ','
       << format_double(s.min) << ',' << format_double(s.max) << ',' << s.n << '\n';
  }
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows) {
  auto os = open_out(path);
  os << ablation_csv_header() << '\n';
  for (const auto& r : rows) os << format_ablation_row(r) << '\n';
}

std::vector<double> read_csv_column(const std::filesystem::path& path, const std::string& column) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw std::runtime_error(path.string() + " is empty");
  std::size_t col = 0;
  std::size_t first = 0;
  const auto& head = rows[0];
  const auto it = std::find(head.begin(), head.end(), column);
  if (it != head.end()) {
    col = static_cast<std::size_t>(it - head.begin());
    first = 1;
  } else if (head.size() == 1) {
    std::size_t used = 0;
    try {
      std::stod(head[0], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    first = used == head[0].size() && used > 0 ? 0 : 1;
  } else {
    throw std::runtime_error("column '" + column + "' not found in " + path.string());
  }
  std::vector<double> out;
  for (std::size_t i = first; i < rows.size(); ++i) {
    if (col >= rows[i].size()) throw std::runtime_error("short row in " + path.string());
    out.push_back(to_double(rows[i][col], path));
  }
  if (out.empty()) throw std::runtime_error("no values in " + path.string());
  return out;
}

std::string histogram_svg(std::span<const double> a, std::span<const double> b,
                          const std::string& label_a, const std::string& label_b,
                          const std::string& title, int bins) {
  if (a.empty()) throw std::invalid_argument("histogram_svg: empty sample");
  if (bins < 1) throw std::invalid_argument("histogram_svg: bins must be >= 1");
  double lo = *std::min_element(a.begin(), a.end());
  double hi = *std::max_element(a.begin(), a.end());
  if (!b.empty()) {
    lo = std::min(lo, *std::min_element(b.begin(), b.end()));
    hi = std::max(hi, *std::max_element(b.begin(), b.end()));
  }
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  auto counts = [&](std::span<const double> xs) {
    std::vector<int> c(static_cast<std::size_t>(bins), 0);
    for (double x : xs) {
      int k = static_cast<int>((x - lo) / (hi - lo) * bins);
      c[static_cast<std::size_t>(std::clamp(k, 0, bins - 1))]++;
    }
    return c;
  };
  const auto ca = counts(a);
  const auto cb = b.empty() ? std::vector<int>() : counts(b);
  int top = 1;
  for (int v : ca) top = std::max(top, v);
  for (int v : cb) top = std::max(top, v);

  const double W = 640, H = 400, L = 60, R = 20, T = 50, B = 50;
  const double pw = W - L - R, ph = H - T - B, bw = pw / bins;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  os << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  os << "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n";
  auto bars = [&](const std::vector<int>& c, const char* color) {
    for (int k = 0; k < bins; ++k) {
      const int v = c[static_cast<std::size_t>(k)];
      if (v == 0) continue;
      const double h = ph * v / top;
      os << "<rect x=\"" << fmt("%.2f", L + k * bw) << "\" y=\"" << fmt("%.2f", T + ph - h)
         << "\" width=\"" << fmt("%.2f", bw) << "\" height=\"" << fmt("%.2f", h) << "\" fill=\""
         << color << "\" fill-opacity=\"0.5\"/>\n";
    }
  };
  bars(ca, "#1f77b4");
  if (!cb.empty()) bars(cb, "#d62728");
  os << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - 25 << "\" font-family=\"sans-serif\" font-size=\"11\">"
     << fmt("%.8g", lo) << "</text>\n";
  os << "<text x=\"" << L + pw << "\" y=\"" << H - 25
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt("%.8g", hi)
     << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << T + 4
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << top << "</text>\n";
  os << "<text x=\"" << L + pw - 5 << "\" y=\"" << T + 15
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">"
     << label_a << " (n=" << a.size() << ")</text>\n";
  if (!b.empty()) {
    const KsResult ks = ks_two_sample(a, b);
    os << "<text x=\"" << L + pw - 5 << "\" y=\"" << T + 31
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">"
       << label_b << " (n=" << b.size() << ")</text>\n";
    os << "<text x=\"" << L + pw - 5 << "\" y=\"" << T + 47
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" class=\"ks\" data-d=\""
       << format_double(ks.d) << "\" data-p=\"" << format_double(ks.p) << "\">KS D=" << fmt("%.6g", ks.d)
       << " p=" << fmt("%.6g", ks.p) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const std::filesystem::path& in_dir, ReportFormat format) {
  if (!std::filesystem::is_directory(in_dir)) {
    throw std::runtime_error(in_dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(in_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<std::pair<std::string, std::vector<EvalRecord>>> evals;
  std::vector<std::pair<std::string, std::vector<double>>> strategies;
  for (const auto& f : files) {
    const auto rows = read_rows(f);
    if (rows.empty()) continue;
    if (rows[0] == split(eval_csv_header())) {
      evals.emplace_back(f.stem().string(), read_eval_csv(f));
    } else if (rows[0] == split("strategy,run,final_energy")) {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string& s = rows[i].at(0);
        auto it = std::find_if(strategies.begin(), strategies.end(),
                               [&](const auto& p) { return p.first == s; });
        if (it == strategies.end()) {
          strategies.emplace_back(s, std::vector<double>{});
          it = strategies.end() - 1;
        }
        it->second.push_back(to_double(rows[i].at(2), f));
      }
    }
  }
  if (evals.empty() && strategies.empty()) {
    throw std::runtime_error("no eval or init-study CSV files in " + in_dir.string());
  }

  std::vector<std::filesystem::path> written;
  auto column = [](const std::vector<EvalRecord>& recs, auto field) {
    std::vector<double> v;
    for (const auto& r : recs) v.push_back(static_cast<double>(r.*field));
    return v;
  };
  if (format == ReportFormat::Csv) {
    std::vector<std::pair<std::string, SummaryStats>> rows;
    for (const auto& [name, recs] : evals) {
      if (recs.empty()) continue;
      rows.emplace_back(name + ":error", summarize(column(recs, &EvalRecord::error)));
      rows.emplace_back(name + ":energy", summarize(column(recs, &EvalRecord::energy)));
      rows.emplace_back(name + ":optimizer_evals", summarize(column(recs, &EvalRecord::optimizer_evals)));
      rows.emplace_back(name + ":params", summarize(column(recs, &EvalRecord::params)));
      rows.emplace_back(name + ":depth", summarize(column(recs, &EvalRecord::depth)));
      rows.emplace_back(name + ":gates", summarize(column(recs, &EvalRecord::gates)));
    }
    for (const auto& [name, e] : strategies) rows.emplace_back("init_study:" + name, summarize(e));
    const auto path = in_dir / "report_summary.csv";
    write_summary_csv(path, rows);
    written.push_back(path);
    return written;
  }

  auto emit = [&](const std::string& stem, const std::string& svg) {
    const auto path = in_dir / (stem + ".svg");
    auto os = open_out(path);
    os << svg;
    written.push_back(path);
  };
  const std::vector<EvalRecord>* warm = nullptr;
  const std::vector<EvalRecord>* zero = nullptr;
  for (const auto& [name, recs] : evals) {
    if (recs.empty()) continue;
    if (name == "eval_warm") warm = &recs;
    if (name == "eval_zero") zero = &recs;
    emit(name + "_energy", histogram_svg(column(recs, &EvalRecord::energy), {}, name, "",
                                         name + ": final energy"));
  }
  if (warm && zero) {
    emit("warm_vs_zero_energy",
         histogram_svg(column(*warm, &EvalRecord::energy), column(*zero, &EvalRecord::energy), "warm",
                       "zero", "Final energy: warm vs zero init"));
    emit("warm_vs_zero_evals",
         histogram_svg(column(*warm, &EvalRecord::optimizer_evals),
                       column(*zero, &EvalRecord::optimizer_evals), "warm", "zero",
                       "Optimizer evaluations: warm vs zero init"));
  }
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const auto& [name, e] = strategies[i];
    emit("init_study_" + name, histogram_svg(e, {}, name, "", "Init study: " + name));
  }
  return written;
}

}  // namespace hyqas
