#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "hyqas/environment.hpp"
#include "hyqas/policy.hpp"

using namespace hyqas;
using doctest::Approx;

namespace {

PolicyConfig small_config(int n = 2, int n_step = 4) {
  PolicyConfig c;
  c.n_qubits = n;
  c.n_step = n_step;
  c.hidden = {8, 6};
  c.embed_dim = 3;
  c.history_dim = 4;
  return c;
}

MaskBundle full_masks(const PolicyConfig& c) {
  MaskBundle m;
  const int a = c.action_count();
  m.legal.assign(static_cast<std::size_t>(a), 1);
  m.param.assign(static_cast<std::size_t>(a), 0);
  for (int i = 0; i < 3 * c.n_qubits; ++i) m.param[static_cast<std::size_t>(i)] = 1;
  m.delta.assign(static_cast<std::size_t>(c.n_step), 0);
  return m;
}

CircuitTensorState sample_state(const PolicyConfig& c) {
  Circuit circ(c.n_qubits, c.n_step);
  circ.append(GateSpec::rotation(GateKind::RY, 0, 0.3));
  circ.append(GateSpec::cnot(0, 1));
  circ.append(GateSpec::rotation(GateKind::RZ, 1, -0.8));
  return encode_state(circ, c.n_step);
}

double normal_pdf(double x, double mu, double s) {
  return std::exp(-0.5 * std::pow((x - mu) / s, 2)) / (s * std::sqrt(2 * std::numbers::pi));
}

}  // namespace

TEST_CASE("fresh policy is uniform and centred") {
  const auto cfg = small_config();
  Rng rng(1);
  const auto p = PolicyParams::create(cfg, rng);
  const auto heads = forward(p, sample_state(cfg), std::nullopt);
  for (double l : heads.logits) CHECK(l == 0.0);
  for (double mu : heads.init_mu) CHECK(mu == 0.0);
  for (double s : heads.init_sigma) CHECK(s == Approx(std::log(2.0) + 1e-3));
  for (double s : heads.delta_sigma) CHECK(s == Approx(std::log1p(std::exp(-2.0)) + 1e-3));
}

TEST_CASE("creation is deterministic") {
  const auto cfg = small_config();
  Rng a(5), b(5), c(6);
  CHECK(PolicyParams::create(cfg, a).data() == PolicyParams::create(cfg, b).data());
  Rng a2(5);
  CHECK(PolicyParams::create(cfg, a2).data() != PolicyParams::create(cfg, c).data());
}

TEST_CASE("masked actions are never sampled") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.5;
  Rng rng(2);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  m.legal[0] = 0;
  m.legal[7] = 0;
  const auto heads = forward(p, sample_state(cfg), std::nullopt);
  const auto probs = action_probabilities(heads.logits, m);
  CHECK(probs[0] == 0.0);
  CHECK(probs[7] == 0.0);
  for (int i = 0; i < 10000; ++i) {
    const int d = sample_discrete(heads, m, rng);
    REQUIRE(m.legal[static_cast<std::size_t>(d)]);
  }
  std::fill(m.legal.begin(), m.legal.end(), 0);
  CHECK_THROWS_AS(action_probabilities(heads.logits, m), std::logic_error);
}

TEST_CASE("uniform sampling frequencies") {
  const auto cfg = small_config();
  Rng rng(3);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  m.legal[4] = 0;
  const auto heads = forward(p, sample_state(cfg), std::nullopt);
  const int n = 100000, k = m.legal_count();
  std::vector<int> counts(m.legal.size(), 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_discrete(heads, m, rng))];
  const double q = 1.0 / k, sd = std::sqrt(n * q * (1 - q));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!m.legal[i]) {
      CHECK(counts[i] == 0);
    } else {
      CHECK(std::abs(counts[i] - n * q) <= 3 * sd);
    }
  }
}

TEST_CASE("cnot choices carry no init angle") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.3;
  Rng rng(4);
  const auto p = PolicyParams::create(cfg, rng);
  const auto m = full_masks(cfg);
  const auto heads = forward(p, sample_state(cfg), std::nullopt);
  for (int d = 0; d < cfg.action_count(); ++d) {
    const auto a = sample_continuous(heads, m, d, rng);
    CHECK(a.init_angle.has_value() == action_is_rotation(d, cfg.n_qubits));
    CHECK(static_cast<int>(a.deltas.size()) == cfg.n_step);
    for (double x : a.deltas) CHECK(x == 0.0);
  }
}

TEST_CASE("log probability matches the density product") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.4;
  Rng rng(6);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  m.legal[1] = 0;
  m.delta = {1, 0, 1, 0};
  const auto state = sample_state(cfg);
  for (int trial = 0; trial < 50; ++trial) {
    auto heads = forward(p, state, std::nullopt);
    const int d = sample_discrete(heads, m, rng);
    heads = forward(p, state, d);
    const auto a = sample_continuous(heads, m, d, rng);
    const auto probs = action_probabilities(heads.logits, m);
    double density = probs[static_cast<std::size_t>(d)];
    if (a.init_angle) {
      density *= normal_pdf(*a.init_angle, heads.init_mu[static_cast<std::size_t>(d)],
                            heads.init_sigma[static_cast<std::size_t>(d)]);
    }
    for (std::size_t i = 0; i < a.deltas.size(); ++i) {
      if (m.delta[i]) density *= normal_pdf(a.deltas[i], heads.delta_mu[i], heads.delta_sigma[i]);
    }
    CHECK(std::abs(log_prob(heads, a, m) - std::log(density)) <= 1e-12 * std::max(1.0, std::abs(std::log(density))));
  }
}

TEST_CASE("gaussian log density at the mean") {
  const auto cfg = small_config();
  Rng rng(7);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  std::fill(m.legal.begin(), m.legal.end(), 0);
  m.legal[2] = 1;
  const auto heads = forward(p, sample_state(cfg), 2);
  HybridAction a{2, heads.init_mu[2], std::vector<double>(4, 0.0)};
  const auto parts = log_prob_parts(heads, a, m);
  CHECK(parts.disc == 0.0);
  CHECK(parts.init == Approx(-0.5 * std::log(2 * std::numbers::pi) - std::log(heads.init_sigma[2])));
  CHECK(parts.refine == 0.0);

  HybridAction inconsistent{2, std::nullopt, {}};
  CHECK_THROWS_AS(log_prob_parts(heads, inconsistent, m), std::invalid_argument);
  HybridAction masked{3, 0.0, {}};
  CHECK_THROWS_AS(log_prob_parts(heads, masked, m), std::invalid_argument);
}

TEST_CASE("entropy of a uniform discrete choice") {
  const auto cfg = small_config();
  Rng rng(8);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  std::fill(m.param.begin(), m.param.end(), 0);
  m.legal[0] = m.legal[5] = 0;
  const auto heads = forward(p, sample_state(cfg), std::nullopt);
  CHECK(entropy(heads, m) == Approx(std::log(m.legal_count())).epsilon(1e-12));
}

TEST_CASE("entropy agrees with a monte carlo estimate") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.5;
  Rng rng(9);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  m.delta = {1, 1, 0, 0};
  const auto heads = forward(p, sample_state(cfg), std::nullopt);
  // Fixed heads: the refine part does not depend on the draw.
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum -= log_prob(heads, sample_action(heads, m, rng), m);
  const double h = entropy(heads, m);
  CHECK(std::abs(sum / n - h) <= 0.01 * std::abs(h));
}

TEST_CASE("act returns consistent parts") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.2;
  Rng rng(10);
  const auto p = PolicyParams::create(cfg, rng);
  auto m = full_masks(cfg);
  m.delta = {1, 0, 1, 0};
  const auto state = sample_state(cfg);
  const auto r = act(p, state, m, rng);
  const auto heads = forward(p, state, r.action.disc);
  CHECK(r.log_prob.total() == Approx(log_prob(heads, r.action, m)));
  const auto g = act_greedy(p, state, m);
  const auto probs = action_probabilities(heads.logits, m);
  CHECK(probs[static_cast<std::size_t>(g.disc)] == *std::max_element(probs.begin(), probs.end()));
}

namespace {

std::vector<PolicySample> gradient_batch(const PolicyParams& p, Rng& rng) {
  const auto& cfg = p.config();
  std::vector<PolicySample> batch;
  Circuit c(cfg.n_qubits, cfg.n_step);
  const double adv[] = {1.3, -0.7, 0.4};
  for (int b = 0; b < 3; ++b) {
    const auto state = encode_state(c, cfg.n_step);
    MaskBundle m = full_masks(cfg);
    for (int i : illegal_actions(c)) m.legal[static_cast<std::size_t>(i)] = 0;
    for (int i = 0; i < c.size(); ++i) m.delta[static_cast<std::size_t>(i)] = is_rotation(c.gate(i).gate.kind);
    const auto r = act(p, state, m, rng);
    batch.push_back({state, r.action, m, adv[b]});
    c.append(action_gate(r.action.disc, cfg.n_qubits, r.action.init_angle.value_or(0.0)));
  }
  return batch;
}

}  // namespace

TEST_CASE("analytic gradient matches finite differences") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.3;
  Rng rng(11);
  auto p = PolicyParams::create(cfg, rng);
  const auto batch = gradient_batch(p, rng);
  const double beta = 0.05;
  const auto g = policy_gradients(p, batch, beta);
  CHECK(g.loss == Approx(policy_loss(p, batch, beta)).epsilon(1e-12));

  double num = 0.0, den = 0.0;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < p.data().size(); ++i) {
    const double orig = p.data()[i];
    p.data()[i] = orig + eps;
    const double up = policy_loss(p, batch, beta);
    p.data()[i] = orig - eps;
    const double down = policy_loss(p, batch, beta);
    p.data()[i] = orig;
    const double fd = (up - down) / (2 * eps);
    num += (fd - g.grad[i]) * (fd - g.grad[i]);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) <= 1e-4);
}

TEST_CASE("gradient edge cases") {
  auto cfg = small_config();
  cfg.head_init_scale = 0.3;
  Rng rng(12);
  const auto p = PolicyParams::create(cfg, rng);
  auto batch = gradient_batch(p, rng);
  const auto base = policy_gradients(p, batch, 0.0);

  auto zero = batch;
  for (auto& s : zero) s.advantage = 0.0;
  for (double v : policy_gradients(p, zero, 0.0).grad) CHECK(v == 0.0);

  auto doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const auto g2 = policy_gradients(p, doubled, 0.0);
  for (std::size_t i = 0; i < g2.grad.size(); ++i) CHECK(g2.grad[i] == Approx(base.grad[i]).epsilon(1e-10));

  auto scaled = batch;
  for (auto& s : scaled) s.advantage *= 2.0;
  const auto gs = policy_gradients(p, scaled, 0.0);
  for (std::size_t i = 0; i < gs.grad.size(); ++i) CHECK(gs.grad[i] == Approx(2.0 * base.grad[i]).epsilon(1e-10));
}

TEST_CASE("checkpoint round trip") {
  auto cfg = small_config();
  Rng rng(13);
  const auto p = PolicyParams::create(cfg, rng);
  const auto path = std::filesystem::temp_directory_path() / "hyqas_policy_test.ckpt";
  save_checkpoint(path, p, {{"note", "x"}});
  const auto loaded = load_checkpoint(path, &cfg);
  CHECK(loaded.params.data() == p.data());
  CHECK(loaded.params.same_layout(p));
  CHECK(loaded.metadata["note"] == "x");

  auto other = cfg;
  other.hidden = {8, 5};
  CHECK_THROWS_AS(load_checkpoint(path, &other), std::runtime_error);

  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPT";
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
}
