#include "hyqas/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace hyqas {

namespace {

constexpr double kMaskedLogit = -1e9;
constexpr double kPi = std::numbers::pi;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * kPi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * kPi * std::numbers::e);

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gaussian_log_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
}

double gaussian_entropy(double sigma) { return kHalfLog2PiE + std::log(sigma); }

/// out = W x + b for a row-major [rows][cols] W.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::vector<double>& out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  out.assign(rows, 0.0);
  for (std::size_t o = 0; o < rows; ++o) {
    const double* row = w.data() + o * cols;
    double acc = b[o];
    for (std::size_t i = 0; i < cols; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
}

/// out = W x + b using only the listed nonzero entries of x (offset `base`).
void sparse_affine(std::span<const double> w, std::span<const double> b, const std::vector<double>& x,
                   std::size_t base, std::size_t cols, const std::vector<std::size_t>& active,
                   std::vector<double>& out) {
  const std::size_t rows = b.size();
  out.assign(b.begin(), b.end());
  for (std::size_t o = 0; o < rows; ++o) {
    const double* row = w.data() + o * cols;
    double acc = 0.0;
    for (std::size_t i : active) {
      if (i < base || i >= base + cols) continue;
      acc += row[i - base] * x[i];
    }
    out[o] += acc;
  }
}

/// dW += g x^T, db += g, dx += W^T g (dx optional).
void affine_backward(std::span<const double> w, std::span<double> dw, std::span<double> db,
                     std::span<const double> x, const std::vector<double>& g, std::vector<double>* dx) {
  const std::size_t cols = x.size();
  for (std::size_t o = 0; o < g.size(); ++o) {
    const double go = g[o];
    if (go == 0.0) continue;
    db[o] += go;
    double* drow = dw.data() + o * cols;
    const double* row = w.data() + o * cols;
    for (std::size_t i = 0; i < cols; ++i) drow[i] += go * x[i];
    if (dx) {
      for (std::size_t i = 0; i < cols; ++i) (*dx)[i] += row[i] * go;
    }
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config and parameter storage

void PolicyConfig::validate() const {
  require(n_qubits >= 2 && n_qubits <= kMaxQubits, "PolicyConfig: n_qubits out of range");
  require(n_step >= 1, "PolicyConfig: n_step must be >= 1");
  for (int h : hidden) require(h >= 1, "PolicyConfig: hidden sizes must be positive");
  require(embed_dim >= 0 && history_dim >= 0, "PolicyConfig: negative embedding size");
  require(sigma_floor > 0.0, "PolicyConfig: sigma_floor must be > 0");
  require(head_init_scale >= 0.0, "PolicyConfig: head_init_scale must be >= 0");
}

nlohmann::json PolicyConfig::to_json() const {
  return {{"n_qubits", n_qubits},
          {"n_step", n_step},
          {"hidden", hidden},
          {"embed_dim", embed_dim},
          {"history_dim", history_dim},
          {"sigma_floor", sigma_floor},
          {"init_sigma_bias", init_sigma_bias},
          {"refine_sigma_bias", refine_sigma_bias},
          {"head_init_scale", head_init_scale}};
}

PolicyConfig PolicyConfig::from_json(const nlohmann::json& j) {
  PolicyConfig c;
  c.n_qubits = j.value("n_qubits", c.n_qubits);
  c.n_step = j.value("n_step", c.n_step);
  c.hidden = j.value("hidden", c.hidden);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.history_dim = j.value("history_dim", c.history_dim);
  c.sigma_floor = j.value("sigma_floor", c.sigma_floor);
  c.init_sigma_bias = j.value("init_sigma_bias", c.init_sigma_bias);
  c.refine_sigma_bias = j.value("refine_sigma_bias", c.refine_sigma_bias);
  c.head_init_scale = j.value("head_init_scale", c.head_init_scale);
  return c;
}

PolicyParams::PolicyParams(PolicyConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t size = 1;
    for (int d : shape) size *= static_cast<std::size_t>(d);
    tensors_.push_back({std::move(name), std::move(shape), offset, size});
    offset += size;
  };
  const int a = cfg_.action_count();
  int fan_in = cfg_.input_size();
  for (std::size_t k = 0; k < cfg_.hidden.size(); ++k) {
    add("enc_w" + std::to_string(k), {cfg_.hidden[k], fan_in});
    add("enc_b" + std::to_string(k), {cfg_.hidden[k]});
    fan_in = cfg_.hidden[k];
  }
  const int h = cfg_.latent_size();
  const int r = cfg_.refine_input_size();
  add("disc_w", {a, h});
  add("disc_b", {a});
  add("init_mu_w", {a, h});
  add("init_mu_b", {a});
  add("init_sigma_w", {a, h});
  add("init_sigma_b", {a});
  add("embed", {a, cfg_.embed_dim});
  add("hist_w", {cfg_.history_dim, cfg_.angle_size()});
  add("hist_b", {cfg_.history_dim});
  add("refine_mu_w", {cfg_.n_step, r});
  add("refine_mu_b", {cfg_.n_step});
  add("refine_sigma_w", {cfg_.n_step, r});
  add("refine_sigma_b", {cfg_.n_step});
  data_.assign(offset, 0.0);
}

PolicyParams PolicyParams::create(const PolicyConfig& cfg, Rng& rng) {
  PolicyParams p(cfg);
  auto fill_uniform = [&](const std::string& name, double scale) {
    for (double& v : p.view(name)) v = rng.uniform(-scale, scale);
  };
  for (const auto& t : std::vector<TensorInfo>(p.tensors_)) {
    const bool weight = t.shape.size() == 2;
    const bool head = t.name.starts_with("disc_") || t.name.starts_with("init_") ||
                      t.name.starts_with("refine_");
    if (weight && !head) {
      fill_uniform(t.name, 1.0 / std::sqrt(static_cast<double>(t.shape[1])));
    } else if (weight && head && cfg.head_init_scale > 0.0) {
      fill_uniform(t.name, cfg.head_init_scale);
    }
  }
  for (double& v : p.view("init_sigma_b")) v = cfg.init_sigma_bias;
  for (double& v : p.view("refine_sigma_b")) v = cfg.refine_sigma_bias;
  return p;
}

const TensorInfo& PolicyParams::tensor(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no policy tensor named " + name);
}

std::span<double> PolicyParams::view(const std::string& name) {
  const auto& t = tensor(name);
  return {data_.data() + t.offset, t.size};
}

std::span<const double> PolicyParams::view(const std::string& name) const {
  const auto& t = tensor(name);
  return {data_.data() + t.offset, t.size};
}

bool PolicyParams::same_layout(const PolicyParams& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward

void forward_refine(const PolicyParams& params, ForwardCache& cache, std::optional<int> disc) {
  const auto& cfg = params.config();
  const std::size_t h = static_cast<std::size_t>(cfg.latent_size());
  const std::size_t e = static_cast<std::size_t>(cfg.embed_dim);
  const std::vector<double>& z = cache.layers.empty() ? cache.input : cache.layers.back();

  cache.refine_input.assign(static_cast<std::size_t>(cfg.refine_input_size()), 0.0);
  std::copy(z.begin(), z.end(), cache.refine_input.begin());
  if (disc) {
    if (*disc < 0 || *disc >= cfg.action_count()) throw std::out_of_range("refine: bad discrete action");
    const auto emb = params.view("embed").subspan(static_cast<std::size_t>(*disc) * e, e);
    std::copy(emb.begin(), emb.end(), cache.refine_input.begin() + static_cast<std::ptrdiff_t>(h));
  }
  std::copy(cache.history.begin(), cache.history.end(),
            cache.refine_input.begin() + static_cast<std::ptrdiff_t>(h + e));
  cache.refine_disc = disc;

  affine(params.view("refine_mu_w"), params.view("refine_mu_b"), cache.refine_input,
         cache.heads.delta_mu);
  affine(params.view("refine_sigma_w"), params.view("refine_sigma_b"), cache.refine_input,
         cache.delta_raw_sigma);
  cache.heads.delta_sigma.resize(cache.delta_raw_sigma.size());
  for (std::size_t i = 0; i < cache.delta_raw_sigma.size(); ++i) {
    cache.heads.delta_sigma[i] = softplus(cache.delta_raw_sigma[i]) + cfg.sigma_floor;
  }
}

ForwardCache forward_cached(const PolicyParams& params, const CircuitTensorState& state,
                            std::optional<int> disc) {
  const auto& cfg = params.config();
  if (state.n_qubits != cfg.n_qubits || state.n_step != cfg.n_step ||
      static_cast<int>(state.binary.size()) != cfg.binary_size() ||
      static_cast<int>(state.angles.size()) != cfg.angle_size()) {
    throw std::invalid_argument("policy forward: state shape does not match the policy");
  }
  ForwardCache c;
  c.input.reserve(static_cast<std::size_t>(cfg.input_size()));
  c.input.insert(c.input.end(), state.binary.begin(), state.binary.end());
  c.input.insert(c.input.end(), state.angles.begin(), state.angles.end());
  for (std::size_t i = 0; i < c.input.size(); ++i) {
    if (c.input[i] != 0.0) c.active_inputs.push_back(i);
  }

  std::vector<double> pre;
  for (std::size_t k = 0; k < cfg.hidden.size(); ++k) {
    const auto w = params.view("enc_w" + std::to_string(k));
    const auto b = params.view("enc_b" + std::to_string(k));
    if (k == 0) {
      sparse_affine(w, b, c.input, 0, c.input.size(), c.active_inputs, pre);
    } else {
      affine(w, b, c.layers.back(), pre);
    }
    for (double& v : pre) v = std::tanh(v);
    c.layers.push_back(pre);
  }
  const std::vector<double>& z = c.layers.empty() ? c.input : c.layers.back();

  affine(params.view("disc_w"), params.view("disc_b"), z, c.heads.logits);
  affine(params.view("init_mu_w"), params.view("init_mu_b"), z, c.init_raw_mu);
  affine(params.view("init_sigma_w"), params.view("init_sigma_b"), z, c.init_raw_sigma);
  c.heads.init_mu.resize(c.init_raw_mu.size());
  c.heads.init_sigma.resize(c.init_raw_sigma.size());
  for (std::size_t i = 0; i < c.init_raw_mu.size(); ++i) {
    c.heads.init_mu[i] = kPi * std::tanh(c.init_raw_mu[i]);
    c.heads.init_sigma[i] = softplus(c.init_raw_sigma[i]) + cfg.sigma_floor;
  }

  sparse_affine(params.view("hist_w"), params.view("hist_b"), c.input,
                static_cast<std::size_t>(cfg.binary_size()), static_cast<std::size_t>(cfg.angle_size()),
                c.active_inputs, c.history);
  forward_refine(params, c, disc);
  return c;
}

PolicyHeads forward(const PolicyParams& params, const CircuitTensorState& state,
                    std::optional<int> disc) {
  return forward_cached(params, state, disc).heads;
}

// ---------------------------------------------------------------------------
// Distributions

std::vector<double> masked_logits(const std::vector<double>& logits, const MaskBundle& masks) {
  if (masks.legal.size() != logits.size()) throw std::invalid_argument("legal mask size mismatch");
  std::vector<double> out(logits);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!masks.legal[i]) out[i] += kMaskedLogit;
  }
  return out;
}

std::vector<double> action_probabilities(const std::vector<double>& logits, const MaskBundle& masks) {
  if (masks.legal_count() == 0) throw std::logic_error("no legal discrete action");
  const auto ml = masked_logits(logits, masks);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ml.size(); ++i) {
    if (masks.legal[i]) mx = std::max(mx, ml[i]);
  }
  std::vector<double> p(ml.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < ml.size(); ++i) {
    if (!masks.legal[i]) continue;
    p[i] = std::exp(ml[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

int sample_discrete(const PolicyHeads& heads, const MaskBundle& masks, Rng& rng) {
  const auto p = action_probabilities(heads.logits, masks);
  const double u = rng.uniform();
  double cum = 0.0;
  int last_legal = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!masks.legal[i]) continue;
    last_legal = static_cast<int>(i);
    cum += p[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_legal;
}

HybridAction sample_continuous(const PolicyHeads& heads, const MaskBundle& masks, int disc,
                               Rng& rng) {
  HybridAction a;
  a.disc = disc;
  const auto d = static_cast<std::size_t>(disc);
  if (masks.param.at(d)) a.init_angle = rng.normal(heads.init_mu.at(d), heads.init_sigma.at(d));
  a.deltas.assign(masks.delta.size(), 0.0);
  for (std::size_t i = 0; i < masks.delta.size(); ++i) {
    if (masks.delta[i]) a.deltas[i] = rng.normal(heads.delta_mu.at(i), heads.delta_sigma.at(i));
  }
  return a;
}

HybridAction sample_action(const PolicyHeads& heads, const MaskBundle& masks, Rng& rng) {
  const int disc = sample_discrete(heads, masks, rng);
  return sample_continuous(heads, masks, disc, rng);
}

namespace {

void check_action(const HybridAction& action, const MaskBundle& masks) {
  const auto n_actions = masks.legal.size();
  if (action.disc < 0 || static_cast<std::size_t>(action.disc) >= n_actions) {
    throw std::invalid_argument("action index out of range");
  }
  const auto d = static_cast<std::size_t>(action.disc);
  if (!masks.legal[d]) throw std::invalid_argument("action is masked as illegal");
  if (static_cast<bool>(masks.param[d]) != action.init_angle.has_value()) {
    throw std::invalid_argument("init angle presence disagrees with the param mask");
  }
  if (!action.deltas.empty() && action.deltas.size() != masks.delta.size()) {
    throw std::invalid_argument("refine delta length mismatch");
  }
  for (std::size_t i = 0; i < action.deltas.size(); ++i) {
    if (!masks.delta[i] && action.deltas[i] != 0.0) {
      throw std::invalid_argument("nonzero refine delta at a masked step");
    }
  }
  if (action.deltas.empty()) {
    for (auto v : masks.delta) {
      if (v) throw std::invalid_argument("missing refine deltas for active steps");
    }
  }
}

}  // namespace

LogProbParts log_prob_parts(const PolicyHeads& heads, const HybridAction& action,
                            const MaskBundle& masks) {
  check_action(action, masks);
  LogProbParts lp;
  const auto p = action_probabilities(heads.logits, masks);
  const auto ml = masked_logits(heads.logits, masks);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ml.size(); ++i) {
    if (masks.legal[i]) mx = std::max(mx, ml[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ml.size(); ++i) {
    if (masks.legal[i]) sum += std::exp(ml[i] - mx);
  }
  const auto d = static_cast<std::size_t>(action.disc);
  lp.disc = ml[d] - mx - std::log(sum);
  if (action.init_angle) {
    lp.init = gaussian_log_density(*action.init_angle, heads.init_mu[d], heads.init_sigma[d]);
  }
  for (std::size_t i = 0; i < masks.delta.size(); ++i) {
    if (masks.delta[i]) {
      lp.refine += gaussian_log_density(action.deltas[i], heads.delta_mu[i], heads.delta_sigma[i]);
    }
  }
  return lp;
}

double entropy(const PolicyHeads& heads, const MaskBundle& masks) {
  const auto p = action_probabilities(heads.logits, masks);
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      h -= p[i] * std::log(p[i]);
      if (masks.param[i]) h += p[i] * gaussian_entropy(heads.init_sigma[i]);
    }
  }
  for (std::size_t i = 0; i < masks.delta.size(); ++i) {
    if (masks.delta[i]) h += gaussian_entropy(heads.delta_sigma[i]);
  }
  return h;
}

ActResult act(const PolicyParams& params, const CircuitTensorState& state, const MaskBundle& masks,
              Rng& rng) {
  ForwardCache cache = forward_cached(params, state, std::nullopt);
  const int disc = sample_discrete(cache.heads, masks, rng);
  forward_refine(params, cache, disc);
  ActResult r;
  r.action = sample_continuous(cache.heads, masks, disc, rng);
  r.log_prob = log_prob_parts(cache.heads, r.action, masks);
  r.entropy = entropy(cache.heads, masks);
  return r;
}

HybridAction act_greedy(const PolicyParams& params, const CircuitTensorState& state,
                        const MaskBundle& masks) {
  ForwardCache cache = forward_cached(params, state, std::nullopt);
  const auto p = action_probabilities(cache.heads.logits, masks);
  int disc = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (masks.legal[i] && (disc < 0 || p[i] > p[static_cast<std::size_t>(disc)])) {
      disc = static_cast<int>(i);
    }
  }
  forward_refine(params, cache, disc);
  HybridAction a;
  a.disc = disc;
  const auto d = static_cast<std::size_t>(disc);
  if (masks.param[d]) a.init_angle = cache.heads.init_mu[d];
  a.deltas.assign(masks.delta.size(), 0.0);
  for (std::size_t i = 0; i < masks.delta.size(); ++i) {
    if (masks.delta[i]) a.deltas[i] = cache.heads.delta_mu[i];
  }
  return a;
}

// ---------------------------------------------------------------------------
// Gradients

namespace {

std::span<double> grad_view(const PolicyParams& params, std::vector<double>& grad,
                            const std::string& name) {
  const auto& t = params.tensor(name);
  return {grad.data() + t.offset, t.size};
}

/// Adds d/dparams of coef_lp * log pi(a|s) + coef_ent * H(pi(.|s)) to grad.
void accumulate(const PolicyParams& params, const ForwardCache& c, const HybridAction& action,
                const MaskBundle& masks, double coef_lp, double coef_ent, std::vector<double>& grad) {
  const auto& cfg = params.config();
  const auto& hd = c.heads;
  const std::size_t n_act = hd.logits.size();
  const std::size_t n_step = hd.delta_mu.size();
  const auto d = static_cast<std::size_t>(action.disc);

  const auto p = action_probabilities(hd.logits, masks);
  double h_cat = 0.0;
  double w_bar = 0.0;
  std::vector<double> w(n_act, 0.0);
  for (std::size_t i = 0; i < n_act; ++i) {
    if (p[i] <= 0.0) continue;
    h_cat -= p[i] * std::log(p[i]);
    if (masks.param[i]) w[i] = gaussian_entropy(hd.init_sigma[i]);
    w_bar += p[i] * w[i];
  }

  // head-output gradients
  std::vector<double> g_logit(n_act, 0.0), g_mu(n_act, 0.0), g_sigma(n_act, 0.0);
  for (std::size_t j = 0; j < n_act; ++j) {
    if (p[j] <= 0.0) continue;
    g_logit[j] = coef_lp * ((j == d ? 1.0 : 0.0) - p[j]) +
                 coef_ent * (-p[j] * (std::log(p[j]) + h_cat) + p[j] * (w[j] - w_bar));
    if (masks.param[j]) g_sigma[j] += coef_ent * p[j] / hd.init_sigma[j];
  }
  if (action.init_angle) {
    const double s = hd.init_sigma[d];
    const double r = *action.init_angle - hd.init_mu[d];
    g_mu[d] += coef_lp * r / (s * s);
    g_sigma[d] += coef_lp * (-1.0 / s + r * r / (s * s * s));
  }
  std::vector<double> g_mu_raw(n_act, 0.0), g_sigma_raw(n_act, 0.0);
  for (std::size_t j = 0; j < n_act; ++j) {
    const double t = std::tanh(c.init_raw_mu[j]);
    g_mu_raw[j] = g_mu[j] * kPi * (1.0 - t * t);
    g_sigma_raw[j] = g_sigma[j] * sigmoid(c.init_raw_sigma[j]);
  }

  std::vector<double> g_dmu(n_step, 0.0), g_dsig_raw(n_step, 0.0);
  for (std::size_t i = 0; i < n_step; ++i) {
    if (!masks.delta[i]) continue;
    const double s = hd.delta_sigma[i];
    const double r = action.deltas[i] - hd.delta_mu[i];
    g_dmu[i] = coef_lp * r / (s * s);
    const double g_s = coef_lp * (-1.0 / s + r * r / (s * s * s)) + coef_ent / s;
    g_dsig_raw[i] = g_s * sigmoid(c.delta_raw_sigma[i]);
  }

  const std::vector<double>& z = c.layers.empty() ? c.input : c.layers.back();
  std::vector<double> dz(z.size(), 0.0);
  affine_backward(params.view("disc_w"), grad_view(params, grad, "disc_w"),
                  grad_view(params, grad, "disc_b"), z, g_logit, &dz);
  affine_backward(params.view("init_mu_w"), grad_view(params, grad, "init_mu_w"),
                  grad_view(params, grad, "init_mu_b"), z, g_mu_raw, &dz);
  affine_backward(params.view("init_sigma_w"), grad_view(params, grad, "init_sigma_w"),
                  grad_view(params, grad, "init_sigma_b"), z, g_sigma_raw, &dz);

  std::vector<double> dr(c.refine_input.size(), 0.0);
  affine_backward(params.view("refine_mu_w"), grad_view(params, grad, "refine_mu_w"),
                  grad_view(params, grad, "refine_mu_b"), c.refine_input, g_dmu, &dr);
  affine_backward(params.view("refine_sigma_w"), grad_view(params, grad, "refine_sigma_w"),
                  grad_view(params, grad, "refine_sigma_b"), c.refine_input, g_dsig_raw, &dr);

  const std::size_t hsz = z.size();
  const std::size_t e = static_cast<std::size_t>(cfg.embed_dim);
  for (std::size_t k = 0; k < hsz; ++k) dz[k] += dr[k];
  if (c.refine_disc) {
    auto demb = grad_view(params, grad, "embed").subspan(static_cast<std::size_t>(*c.refine_disc) * e, e);
    for (std::size_t k = 0; k < e; ++k) demb[k] += dr[hsz + k];
  }
  {
    auto dw = grad_view(params, grad, "hist_w");
    auto db = grad_view(params, grad, "hist_b");
    const std::size_t base = static_cast<std::size_t>(cfg.binary_size());
    const std::size_t cols = static_cast<std::size_t>(cfg.angle_size());
    for (std::size_t o = 0; o < db.size(); ++o) {
      const double g = dr[hsz + e + o];
      if (g == 0.0) continue;
      db[o] += g;
      double* row = dw.data() + o * cols;
      for (std::size_t i : c.active_inputs) {
        if (i >= base) row[i - base] += g * c.input[i];
      }
    }
  }

  // encoder
  std::vector<double> delta = dz;
  for (std::size_t k = cfg.hidden.size(); k-- > 0;) {
    const auto& act = c.layers[k];
    for (std::size_t o = 0; o < delta.size(); ++o) delta[o] *= 1.0 - act[o] * act[o];
    const std::string wn = "enc_w" + std::to_string(k);
    const std::string bn = "enc_b" + std::to_string(k);
    auto dw = grad_view(params, grad, wn);
    auto db = grad_view(params, grad, bn);
    if (k == 0) {
      const std::size_t cols = c.input.size();
      for (std::size_t o = 0; o < delta.size(); ++o) {
        const double g = delta[o];
        if (g == 0.0) continue;
        db[o] += g;
        double* row = dw.data() + o * cols;
        for (std::size_t i : c.active_inputs) row[i] += g * c.input[i];
      }
    } else {
      std::vector<double> below(c.layers[k - 1].size(), 0.0);
      affine_backward(params.view(wn), dw, db, c.layers[k - 1], delta, &below);
      delta = std::move(below);
    }
  }
}

}  // namespace

PolicyGradient policy_gradients(const PolicyParams& params, std::span<const PolicySample> batch,
                                double entropy_beta) {
  if (batch.empty()) throw std::invalid_argument("policy_gradients: empty batch");
  PolicyGradient out;
  out.grad.assign(params.data().size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    const ForwardCache c = forward_cached(params, s.state, s.action.disc);
    const double lp = log_prob(c.heads, s.action, s.masks);
    const double h = entropy(c.heads, s.masks);
    out.loss -= inv_b * (lp * s.advantage + entropy_beta * h);
    accumulate(params, c, s.action, s.masks, -inv_b * s.advantage, -inv_b * entropy_beta, out.grad);
  }
  if (!std::isfinite(out.loss)) throw std::runtime_error("policy loss is not finite");
  for (double g : out.grad) {
    if (!std::isfinite(g)) throw std::runtime_error("policy gradient is not finite");
  }
  return out;
}

double policy_loss(const PolicyParams& params, std::span<const PolicySample> batch,
                   double entropy_beta) {
  if (batch.empty()) throw std::invalid_argument("policy_loss: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& s : batch) {
    const PolicyHeads h = forward(params, s.state, s.action.disc);
    loss -= inv_b * (log_prob(h, s.action, s.masks) * s.advantage + entropy_beta * entropy(h, s.masks));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'Q', 'A', 'S', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const nlohmann::json& metadata) {
  nlohmann::json header;
  header["config"] = params.config().to_json();
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : params.tensors()) header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
  header["metadata"] = metadata;
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(os, kCheckpointVersion);
  write_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_le<std::uint64_t>(os, params.data().size());
  for (double v : params.data()) write_le<double>(os, v);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const PolicyConfig* expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + 8, kMagic)) throw std::runtime_error("not a policy checkpoint");
  const auto version = read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = read_le<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("checkpoint header truncated");
  const auto header = nlohmann::json::parse(text);

  LoadedCheckpoint out{PolicyParams(PolicyConfig::from_json(header.at("config"))),
                       header.value("metadata", nlohmann::json::object())};
  const auto& stored = header.at("tensors");
  const auto& tensors = out.params.tensors();
  if (stored.size() != tensors.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (stored[i].at("name") != tensors[i].name ||
        stored[i].at("shape").get<std::vector<int>>() != tensors[i].shape) {
      throw std::runtime_error("checkpoint tensor " + tensors[i].name + " has an inconsistent shape");
    }
  }
  if (expected) {
    const PolicyParams want(*expected);
    if (!want.same_layout(out.params)) {
      throw std::runtime_error("checkpoint shapes do not match the expected policy configuration");
    }
  }
  const auto count = read_le<std::uint64_t>(is);
  if (count != out.params.data().size()) throw std::runtime_error("checkpoint data size mismatch");
  for (double& v : out.params.data()) v = read_le<double>(is);
  return out;
}

}  // namespace hyqas
