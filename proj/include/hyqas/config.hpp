#pragma once

#include <filesystem>

#include "hyqas/trainer.hpp"
#include "json.hpp"

namespace hyqas {

/// Everything a CLI run needs besides the Hamiltonian. Missing keys keep defaults.
///
///   { "train": {...}, "env": {...}, "optimizer": {...}, "eval_optimizer": {...},
///     "policy": {...}, "curriculum": {...}, "eval": {...} }
struct RunConfig {
  TrainConfig train;
  EnvConfig env;
  PolicyConfig policy;
  EvalConfig eval;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json optimizer_config_to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j, OptimizerConfig base = {});

/// Width and n_step of the policy follow the Hamiltonian and the environment.
void bind_to_hamiltonian(RunConfig& c, const Hamiltonian& h);

}  // namespace hyqas
