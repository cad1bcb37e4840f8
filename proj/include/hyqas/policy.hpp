#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyqas/action.hpp"
#include "hyqas/circuit.hpp"
#include "hyqas/rng.hpp"
#include "json.hpp"

namespace hyqas {

struct PolicyConfig {
  int n_qubits = 2;
  int n_step = 40;
  std::vector<int> hidden = {256, 256};  // tanh encoder layers
  int embed_dim = 16;                    // gate embedding fed to the refine head
  int history_dim = 64;                  // linear projection of the angles tensor
  double sigma_floor = 1e-3;
  double init_sigma_bias = 0.0;    // raw sigma bias of the init head at creation
  double refine_sigma_bias = -2.0; // raw sigma bias of the refine head at creation
  double head_init_scale = 0.0;    // output-layer weights start at U(-s, s)

  int action_count() const { return discrete_action_count(n_qubits); }
  int binary_size() const { return n_qubits * (n_qubits + 3) * n_step; }
  int angle_size() const { return n_qubits * 3 * n_step; }
  int input_size() const { return binary_size() + angle_size(); }
  int latent_size() const { return hidden.empty() ? input_size() : hidden.back(); }
  int refine_input_size() const { return latent_size() + embed_dim + history_dim; }

  void validate() const;
  nlohmann::json to_json() const;
  static PolicyConfig from_json(const nlohmann::json& j);
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/**
 * All policy weights in one flat buffer with named views. Matrices are
 * row-major [out][in]. Gradients share the same layout.
 */
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(PolicyConfig cfg);  // all zeros

  /// Encoder, embedding and history weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
  /// output layers per cfg.head_init_scale; sigma biases per cfg.
  static PolicyParams create(const PolicyConfig& cfg, Rng& rng);

  const PolicyConfig& config() const { return cfg_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(const std::string& name) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::span<double> view(const std::string& name);
  std::span<const double> view(const std::string& name) const;

  bool same_layout(const PolicyParams& other) const;

 private:
  PolicyConfig cfg_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> data_;
};

struct PolicyHeads {
  std::vector<double> logits;
  std::vector<double> init_mu;
  std::vector<double> init_sigma;
  std::vector<double> delta_mu;
  std::vector<double> delta_sigma;
};

struct LogProbParts {
  double disc = 0.0;
  double init = 0.0;
  double refine = 0.0;
  double total() const { return disc + init + refine; }
};

/// Activations kept for backpropagation.
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::size_t> active_inputs;  // nonzero entries of input
  std::vector<std::vector<double>> layers; // post-tanh activations
  std::vector<double> init_raw_mu;
  std::vector<double> init_raw_sigma;
  std::vector<double> history;
  std::vector<double> refine_input;
  std::vector<double> delta_raw_sigma;
  std::optional<int> refine_disc;
  PolicyHeads heads;
};

/// Trunk pass (logits and init heads) plus the refine pass for `disc`
/// (zero embedding when absent).
ForwardCache forward_cached(const PolicyParams& params, const CircuitTensorState& state,
                            std::optional<int> disc);
/// Recomputes only the refine heads of `cache` for another discrete choice.
void forward_refine(const PolicyParams& params, ForwardCache& cache, std::optional<int> disc);

PolicyHeads forward(const PolicyParams& params, const CircuitTensorState& state,
                    std::optional<int> disc);

/// Masked logits: illegal entries shifted by -1e9.
std::vector<double> masked_logits(const std::vector<double>& logits, const MaskBundle& masks);
/// Softmax of the masked logits; illegal entries are exactly zero.
std::vector<double> action_probabilities(const std::vector<double>& logits, const MaskBundle& masks);

int sample_discrete(const PolicyHeads& heads, const MaskBundle& masks, Rng& rng);

/// Given heads whose refine part is already conditioned on the choice,
/// draw the init angle (rotations with an active param mask) and the
/// masked refine deltas.
HybridAction sample_continuous(const PolicyHeads& heads, const MaskBundle& masks, int disc,
                               Rng& rng);

/// Discrete, then init, then refine from fixed heads.
HybridAction sample_action(const PolicyHeads& heads, const MaskBundle& masks, Rng& rng);

LogProbParts log_prob_parts(const PolicyHeads& heads, const HybridAction& action,
                            const MaskBundle& masks);
inline double log_prob(const PolicyHeads& heads, const HybridAction& action,
                       const MaskBundle& masks) {
  return log_prob_parts(heads, action, masks).total();
}

double entropy(const PolicyHeads& heads, const MaskBundle& masks);

struct ActResult {
  HybridAction action;
  LogProbParts log_prob;
  double entropy = 0.0;
};

/// Full two-pass decision for one state.
ActResult act(const PolicyParams& params, const CircuitTensorState& state,
              const MaskBundle& masks, Rng& rng);

/// Mode of each factor instead of a draw: argmax gate, mean angle, mean deltas.
HybridAction act_greedy(const PolicyParams& params, const CircuitTensorState& state,
                        const MaskBundle& masks);

struct PolicySample {
  CircuitTensorState state;
  HybridAction action;
  MaskBundle masks;
  double advantage = 0.0;
};

struct PolicyGradient {
  std::vector<double> grad;  // layout of PolicyParams::data()
  double loss = 0.0;
};

/// Gradient of -(1/B) * sum_b [log pi(a_b|s_b) * A_b + beta * H(pi(.|s_b))].
PolicyGradient policy_gradients(const PolicyParams& params, std::span<const PolicySample> batch,
                                double entropy_beta);

/// The loss alone (for finite-difference checks).
double policy_loss(const PolicyParams& params, std::span<const PolicySample> batch,
                   double entropy_beta);

// Checkpoints: "HYQASCKP", u32 version, u64 header length, JSON header
// (config, tensor shapes, caller metadata), then the raw little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedCheckpoint {
  PolicyParams params;
  nlohmann::json metadata;
};

/// Throws std::runtime_error on a malformed file or, when `expected` is
/// given, on any tensor shape that differs from it.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const PolicyConfig* expected = nullptr);

}  // namespace hyqas
