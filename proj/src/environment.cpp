#include "hyqas/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyqas {

CurriculumState CurriculumState::initial(double e_min, double e_start,
                                         const CurriculumHyper& hyper) {
  CurriculumState c;
  c.e_min = e_min;
  c.tau = hyper.xi1;
  c.xi = e_min + c.tau;
  c.e_low = e_start;
  c.hyper = hyper;
  return c;
}

CurriculumState curriculum_update_step(CurriculumState cur, double e_t) {
  cur.e_low = std::min(cur.e_low, e_t);
  return cur;
}

CurriculumState curriculum_update_episode(CurriculumState cur, bool episode_succeeded) {
  ++cur.episode_count;
  if (episode_succeeded) ++cur.success_count;
  const auto& hp = cur.hyper;
  if (hp.greedy_every > 0 && cur.episode_count % hp.greedy_every == 0) {
    cur.tau = std::abs(cur.e_low - cur.e_min) + hp.delta;
    cur.success_count = 0;
  } else if (cur.success_count > hp.success_threshold) {
    cur.tau -= hp.delta / hp.kappa;
  }
  cur.xi = cur.e_min + cur.tau;
  return cur;
}

int sample_episode_length(int n_step, double p, Rng& rng) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("sample_episode_length: p must lie in (0, 1)");
  if (n_step < 1) throw std::invalid_argument("sample_episode_length: n_step must be >= 1");
  const long draw = rng.negative_binomial(n_step, p);
  return static_cast<int>(std::clamp<long>(draw, 1, n_step));
}

double compute_reward(double e_t, double e_prev, double e_start, double e_min, double xi, int t,
                      int episode_cap) {
  if (!std::isfinite(e_t) || !std::isfinite(e_prev) || !std::isfinite(e_start) ||
      !std::isfinite(e_min) || !std::isfinite(xi)) {
    throw std::invalid_argument("compute_reward: non-finite input");
  }
  if (!(e_start > e_min)) throw std::invalid_argument("compute_reward: e_start must exceed e_min");
  if (e_t < xi) return kSuccessReward;
  if (t >= episode_cap) return kFailureReward;
  return std::max((e_prev - e_t) / (e_start - e_min), -1.0);
}

void EnvConfig::validate() const {
  if (n_step < 1) throw std::invalid_argument("EnvConfig: n_step must be >= 1");
  if (!(halt_p > 0.0 && halt_p < 1.0)) throw std::invalid_argument("EnvConfig: halt_p must lie in (0, 1)");
  if (!(refine_clip > 0.0)) throw std::invalid_argument("EnvConfig: refine_clip must be > 0");
  optimizer.validate();
}

VqeEnvironment::VqeEnvironment(const Hamiltonian& h, EnvConfig cfg, EnergyBounds bounds)
    : h_(&h), cfg_(std::move(cfg)), bounds_(bounds) {
  cfg_.validate();
  if (h.n_qubits < 2) throw std::invalid_argument("VqeEnvironment: need at least 2 qubits");
  e_empty_ = hamiltonian_expectation(StateVector::zero(h.n_qubits), h);
  ep_.circuit = Circuit(h.n_qubits, cfg_.n_step);
  ep_.done = true;
}

CircuitTensorState VqeEnvironment::reset(Rng& rng, std::optional<int> fixed_cap) {
  ep_ = EpisodeState{};
  ep_.circuit = Circuit(h_->n_qubits, cfg_.n_step);
  if (fixed_cap) {
    if (*fixed_cap < 1 || *fixed_cap > cfg_.n_step) {
      throw std::invalid_argument("reset: episode cap must be in [1, n_step]");
    }
    ep_.episode_cap = *fixed_cap;
  } else if (cfg_.random_halting) {
    ep_.episode_cap = sample_episode_length(cfg_.n_step, cfg_.halt_p, rng);
  } else {
    ep_.episode_cap = cfg_.n_step;
  }
  ep_.e_start = e_empty_;
  ep_.e_prev = e_empty_;
  ep_.delta_mask.assign(static_cast<std::size_t>(cfg_.n_step), 0);
  return encode_state(ep_.circuit, cfg_.n_step);
}

MaskBundle VqeEnvironment::masks() const {
  const int n = h_->n_qubits;
  const int a = discrete_action_count(n);
  MaskBundle m;
  m.legal.assign(static_cast<std::size_t>(a), 1);
  for (int i : illegal_actions(ep_.circuit)) m.legal[static_cast<std::size_t>(i)] = 0;
  m.param.assign(static_cast<std::size_t>(a), 0);
  for (int i = 0; i < 3 * n; ++i) m.param[static_cast<std::size_t>(i)] = 1;
  m.delta = ep_.delta_mask;
  return m;
}

StepOutcome VqeEnvironment::step(const HybridAction& action, CurriculumState& cur) {
  if (ep_.done) throw std::logic_error("step called on a finished episode");
  const int n = h_->n_qubits;
  const int a = discrete_action_count(n);
  if (action.disc < 0 || action.disc >= a) {
    throw std::logic_error("discrete action " + std::to_string(action.disc) + " out of range");
  }
  const auto illegal = illegal_actions(ep_.circuit);
  if (std::binary_search(illegal.begin(), illegal.end(), action.disc)) {
    throw std::logic_error("illegal discrete action " + std::to_string(action.disc) + " submitted");
  }
  const bool rotation = action_is_rotation(action.disc, n);
  if (!rotation && action.init_angle) {
    throw std::logic_error("CNOT action carries an init angle");
  }
  if (action.init_angle && !std::isfinite(*action.init_angle)) {
    throw std::logic_error("non-finite init angle");
  }
  if (!action.deltas.empty() && static_cast<int>(action.deltas.size()) != cfg_.n_step) {
    throw std::logic_error("refine deltas must have n_step entries");
  }

  const int t = ep_.step;
  for (std::size_t i = 0; i < action.deltas.size(); ++i) {
    const double d = action.deltas[i];
    if (d == 0.0) continue;
    if (!std::isfinite(d)) throw std::logic_error("non-finite refine delta");
    if (static_cast<int>(i) >= t || !ep_.delta_mask[i]) {
      throw std::logic_error("refine delta at a step without a prior rotation");
    }
  }
  ep_.circuit.append(action_gate(action.disc, n, rotation ? action.init_angle.value_or(0.0) : 0.0));

  for (std::size_t i = 0; i < action.deltas.size(); ++i) {
    const double d = action.deltas[i];
    if (d == 0.0) continue;
    const int gi = static_cast<int>(i);
    const double clipped = std::clamp(d, -cfg_.refine_clip, cfg_.refine_clip);
    ep_.circuit.set_angle(gi, *ep_.circuit.gate(gi).gate.angle + clipped);
  }
  ep_.delta_mask[static_cast<std::size_t>(t)] = rotation ? 1 : 0;
  ep_.step = t + 1;

  StepOutcome out;
  const std::vector<double> agent_params = ep_.circuit.parameters();
  out.agent_energy = circuit_energy(ep_.circuit, *h_);
  const bool capped = ep_.step >= ep_.episode_cap;
  if (cfg_.use_external_optimizer && (cfg_.optimize_every_step || capped)) {
    const Circuit& c = ep_.circuit;
    const Hamiltonian& h = *h_;
    const OptimizeResult r = minimize(
        [&c, &h](std::span<const double> x) { return circuit_energy(c, h, x); }, agent_params,
        cfg_.optimizer);
    out.energy = r.best_value;
    out.optimizer_evals = r.n_evals;
    out.optimized_params = r.best_params;
  } else {
    out.energy = out.agent_energy;
    out.optimized_params = agent_params;
  }

  out.reward = compute_reward(out.energy, ep_.e_prev, ep_.e_start, bounds_.e_min, cur.xi, ep_.step,
                              ep_.episode_cap);
  out.succeeded = out.energy < cur.xi;
  out.done = out.succeeded || capped;
  ep_.done = out.done;
  ep_.e_prev = out.energy;
  cur = curriculum_update_step(cur, out.energy);
  out.observation = encode_state(ep_.circuit, cfg_.n_step);
  return out;
}

MaskBundle restrict_masks(MaskBundle m, bool hybrid, bool refine) {
  if (!hybrid) std::fill(m.param.begin(), m.param.end(), 0);
  if (!hybrid || !refine) std::fill(m.delta.begin(), m.delta.end(), 0);
  return m;
}

}  // namespace hyqas
