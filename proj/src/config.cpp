#include "hyqas/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hyqas {

nlohmann::json optimizer_config_to_json(const OptimizerConfig& c) {
  return {{"max_evals", c.max_evals},
          {"initial_step", c.initial_step},
          {"final_step", c.final_step},
          {"convergence_tol", c.convergence_tol},
          {"algorithm", optimizer_algorithm_name(c.algorithm)}};
}

OptimizerConfig optimizer_config_from_json(const nlohmann::json& j, OptimizerConfig c) {
  c.max_evals = j.value("max_evals", c.max_evals);
  c.initial_step = j.value("initial_step", c.initial_step);
  c.final_step = j.value("final_step", c.final_step);
  c.convergence_tol = j.value("convergence_tol", c.convergence_tol);
  if (j.contains("algorithm")) c.algorithm = optimizer_algorithm_from_name(j.at("algorithm").get<std::string>());
  c.validate();
  return c;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  const auto section = [&](const char* key) {
    return j.contains(key) ? j.at(key) : nlohmann::json::object();
  };
  try {
    const auto t = section("train");
    c.train.episodes_total = t.value("episodes_total", c.train.episodes_total);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.gamma_final = t.value("gamma_final", c.train.gamma_final);
    c.train.entropy_beta = t.value("entropy_beta", c.train.entropy_beta);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.checkpoint_every = t.value("checkpoint_every", c.train.checkpoint_every);
    c.train.retain_best = t.value("retain_best", c.train.retain_best);
    c.train.grad_clip = t.value("grad_clip", c.train.grad_clip);
    if (t.contains("variant")) c.train.variant = variant_from_name(t.at("variant").get<std::string>());
    if (t.contains("adam") && !t.at("adam").is_null() && t.at("adam") != false) {
      AdamConfig a;
      if (t.at("adam").is_object()) {
        a.beta1 = t.at("adam").value("beta1", a.beta1);
        a.beta2 = t.at("adam").value("beta2", a.beta2);
        a.eps = t.at("adam").value("eps", a.eps);
      }
      c.train.adam = a;
    }

    const auto cu = section("curriculum");
    c.train.curriculum.xi1 = cu.value("xi1", c.train.curriculum.xi1);
    c.train.curriculum.delta = cu.value("delta", c.train.curriculum.delta);
    c.train.curriculum.kappa = cu.value("kappa", c.train.curriculum.kappa);
    c.train.curriculum.greedy_every = cu.value("greedy_every", c.train.curriculum.greedy_every);
    c.train.curriculum.success_threshold = cu.value("success_threshold", c.train.curriculum.success_threshold);

    const auto e = section("env");
    c.env.n_step = e.value("n_step", c.env.n_step);
    c.env.halt_p = e.value("halt_p", c.env.halt_p);
    c.env.random_halting = e.value("random_halting", c.env.random_halting);
    c.env.use_external_optimizer = e.value("use_external_optimizer", c.env.use_external_optimizer);
    c.env.optimize_every_step = e.value("optimize_every_step", c.env.optimize_every_step);
    c.env.refine_clip = e.value("refine_clip", c.env.refine_clip);
    c.env.optimizer = optimizer_config_from_json(section("optimizer"), c.env.optimizer);

    c.policy = PolicyConfig::from_json(section("policy"));
    c.policy.n_step = c.env.n_step;

    const auto ev = section("eval");
    c.eval.n_rollouts = ev.value("n_rollouts", c.eval.n_rollouts);
    c.eval.greedy = ev.value("greedy", c.eval.greedy);
    c.eval.final_optimizer = optimizer_config_from_json(section("eval_optimizer"), c.eval.final_optimizer);
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("bad run config: ") + ex.what());
  }
  c.train.validate();
  c.env.validate();
  return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json train{{"episodes_total", c.train.episodes_total},
                       {"batch_size", c.train.batch_size},
                       {"learning_rate", c.train.learning_rate},
                       {"gamma_final", c.train.gamma_final},
                       {"entropy_beta", c.train.entropy_beta},
                       {"seed", c.train.seed},
                       {"checkpoint_every", c.train.checkpoint_every},
                       {"retain_best", c.train.retain_best},
                       {"grad_clip", c.train.grad_clip},
                       {"variant", variant_name(c.train.variant)}};
  if (c.train.adam) {
    train["adam"] = {{"beta1", c.train.adam->beta1}, {"beta2", c.train.adam->beta2}, {"eps", c.train.adam->eps}};
  } else {
    train["adam"] = nullptr;
  }
  const auto& cu = c.train.curriculum;
  return {{"train", train},
          {"curriculum",
           {{"xi1", cu.xi1},
            {"delta", cu.delta},
            {"kappa", cu.kappa},
            {"greedy_every", cu.greedy_every},
            {"success_threshold", cu.success_threshold}}},
          {"env",
           {{"n_step", c.env.n_step},
            {"halt_p", c.env.halt_p},
            {"random_halting", c.env.random_halting},
            {"use_external_optimizer", c.env.use_external_optimizer},
            {"optimize_every_step", c.env.optimize_every_step},
            {"refine_clip", c.env.refine_clip}}},
          {"optimizer", optimizer_config_to_json(c.env.optimizer)},
          {"policy", c.policy.to_json()},
          {"eval", {{"n_rollouts", c.eval.n_rollouts}, {"greedy", c.eval.greedy}}},
          {"eval_optimizer", optimizer_config_to_json(c.eval.final_optimizer)}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument("config " + path.string() + ": " + ex.what());
  }
  return run_config_from_json(j);
}

void bind_to_hamiltonian(RunConfig& c, const Hamiltonian& h) {
  c.policy.n_qubits = h.n_qubits;
  c.policy.n_step = c.env.n_step;
  c.policy.validate();
}

}  // namespace hyqas
