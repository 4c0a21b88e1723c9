// Command-line front end: generation, the offline multitask pipeline, the
// three downstream consumers, config-driven sweeps, and the invariant
// verification battery.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "morl/generators.hpp"
#include "morl/harness.hpp"
#include "morl/serialization.hpp"
#include "morl/verify.hpp"

namespace fs = std::filesystem;

namespace {

// Flags are bound directly to ExperimentConfig fields, so the config file
// has to be loaded before CLI11 writes parsed values on top of it.  A small
// pre-scan of argv finds --config without a full parse.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    const std::string prefix = "--config=";
    if (arg.rfind(prefix, 0) == 0) return arg.substr(prefix.size());
  }
  return {};
}

void add_experiment_flags(CLI::App* sub, morl::ExperimentConfig& c,
                          std::string& config_path) {
  sub->add_option("--config", config_path, "JSON config file");
  sub->add_option("-S,--states", c.num_states, "state count");
  sub->add_option("-K,--actions", c.num_actions, "action count");
  sub->add_option("-H,--horizon", c.horizon, "horizon");
  sub->add_option("-d,--rank", c.rank, "feature dimension");
  sub->add_option("-T,--tasks", c.num_tasks, "task count");
  sub->add_option("--phi-decoys", c.phi_decoys, "feature decoy count");
  sub->add_option("--psi-decoys", c.psi_decoys, "factor decoy count");
  sub->add_option("--perturb-scale", c.perturb_scale, "decoy perturbation");
  sub->add_option("--scale-decay", c.scale_decay, "decoy level decay");
  sub->add_option("--min-action-prob", c.min_action_prob,
                  "behavior policy floor");
  sub->add_option("--kappa-min", c.kappa_min,
                  "required minimum state occupancy");
  sub->add_option("--perturb-weight", c.perturb_weight,
                  "target kernel perturbation weight");
  sub->add_option("--delta", c.delta, "failure probability");
  sub->add_option("--c-beta", c.c_beta, "bonus scale constant");
  sub->add_option("--lambda-mode", c.lambda_mode, "theory or manual");
  sub->add_option("--lambda-const", c.lambda_const,
                  "constant in the theory ridge scale");
  sub->add_option("--lambda-manual", c.lambda_manual, "manual ridge scale");
  sub->add_option("--lambda-d", c.lambda_d, "downstream ridge scale");
  sub->add_option("--alpha-mode", c.alpha_mode, "theory or manual");
  sub->add_option("--alpha-manual", c.alpha_manual, "manual penalty scale");
  sub->add_option("--xi-down-mode", c.xi_down_mode,
                  "measured, lemma, or manual");
  sub->add_option("--xi-down-manual", c.xi_down_manual, "manual xi_down");
  sub->add_option("--n-upstream", c.n_upstream,
                  "upstream episodes per task for downstream runs");
  sub->add_option("--num-rewards", c.num_rewards,
                  "revealed rewards per exploration dataset");
  sub->add_option("--n-grid", c.n_grid, "upstream episode grid");
  sub->add_option("--t-grid", c.t_grid, "task count grid");
  sub->add_option("--k-rfe-grid", c.k_rfe_grid, "exploration episode grid");
  sub->add_option("--n-off-grid", c.n_off_grid, "offline episode grid");
  sub->add_option("--n-on-grid", c.n_on_grid, "online episode grid");
  sub->add_option("--seeds", c.seeds, "seed list");
  sub->add_option("--out", c.out_dir, "output directory");
  sub->add_option("--tag", c.tag, "output file tag");
  sub->add_option("--threads", c.threads, "worker threads");
}

int run_experiments(morl::ExperimentConfig config,
                    const std::vector<std::string>& names) {
  if (!names.empty()) config.experiments = names;
  if (config.seeds.empty()) config.seeds = {0};
  const morl::SweepResult result = morl::run_sweep(config);
  const std::vector<std::string> files = morl::write_sweep_csv(result, config);
  for (const std::string& file : files) std::cout << "wrote " << file << "\n";
  for (const auto& [name, fit] : result.slopes) {
    std::cout << name << " slope " << fit.slope << " (stderr " << fit.stderr_
              << ")\n";
  }
  long errors = 0;
  for (const auto& row : result.upstream) errors += !row.error.empty();
  for (const auto& row : result.rfe) errors += !row.error.empty();
  for (const auto& row : result.offline) errors += !row.error.empty();
  for (const auto& row : result.online) errors += !row.error.empty();
  if (errors > 0) {
    std::cout << errors << " row(s) recorded an error\n";
    return 1;
  }
  return 0;
}

int run_gen(const morl::ExperimentConfig& c, std::uint64_t seed,
            int episodes) {
  fs::path root(c.out_dir);
  if (root.is_relative()) {
    if (const char* env_root = std::getenv("MORL_OUT")) {
      root = fs::path(env_root) / root;
    }
  }
  root /= "family_" + c.tag;
  fs::create_directories(root);

  morl::Rng family_rng(morl::derive_seed(seed, morl::stream::family, 0));
  morl::TaskFamily family = morl::gen_task_family(
      c.num_states, c.num_actions, c.horizon, c.rank, c.num_tasks, family_rng);

  morl::FamilyManifest manifest;
  manifest.seed = seed;
  manifest.num_states = c.num_states;
  manifest.num_actions = c.num_actions;
  manifest.horizon = c.horizon;
  manifest.rank = c.rank;

  std::vector<morl::StochasticPolicy> behaviors;
  for (int t = 0; t < c.num_tasks; ++t) {
    const fs::path task_path = root / ("task_" + std::to_string(t) + ".json");
    morl::write_text_file(task_path.string(), morl::to_json(family.tasks[t]));
    manifest.task_files.push_back(task_path.filename().string());

    morl::Rng behavior_rng(morl::derive_seed(
        seed, morl::stream::behavior, static_cast<std::uint64_t>(t), 0));
    auto [policy, cert] = morl::gen_behavior_policy(
        family.tasks[t], c.min_action_prob, behavior_rng);
    const fs::path policy_path =
        root / ("behavior_" + std::to_string(t) + ".json");
    morl::write_text_file(policy_path.string(), morl::to_json(policy));
    manifest.policy_files.push_back(policy_path.filename().string());
    behaviors.push_back(std::move(policy));
    std::cout << "task " << t << ": omega " << cert.omega << ", kappa "
              << cert.kappa << "\n";
  }

  morl::Rng target_rng(morl::derive_seed(seed, morl::stream::target));
  const morl::Vec coeffs = morl::Vec::Constant(c.num_tasks, 1.0 / c.num_tasks);
  auto [target, spec] =
      morl::gen_target_task(family, coeffs, c.perturb_weight, target_rng);
  const fs::path target_path = root / "target.json";
  morl::write_text_file(target_path.string(), morl::to_json(target));
  manifest.target_file = target_path.filename().string();
  std::cout << "target: xi " << spec.xi << "\n";

  morl::Rng data_rng(morl::derive_seed(seed, morl::stream::dataset));
  const morl::OfflineDataset data =
      morl::gen_dataset(family, behaviors, episodes, data_rng);
  const fs::path data_path = root / "dataset.json";
  morl::write_text_file(data_path.string(), morl::to_json(data));
  manifest.dataset_file = data_path.filename().string();

  const fs::path manifest_path = root / "manifest.json";
  morl::write_text_file(manifest_path.string(), morl::to_json(manifest));
  std::cout << "wrote " << manifest_path.string() << "\n";
  return 0;
}

int run_verify(const std::string& scope, std::uint64_t seed,
               const std::string& mdp_file) {
  bool all_passed = true;
  if (!mdp_file.empty()) {
    const morl::VerifyReport report = morl::validate_mdp_file(mdp_file);
    std::cout << report.render();
    all_passed = all_passed && report.all_passed();
  }
  if (scope == "fast" || scope == "all") {
    const morl::VerifyReport report = morl::verify_fast(seed);
    std::cout << report.render();
    all_passed = all_passed && report.all_passed();
  }
  if (scope == "stat" || scope == "all") {
    const morl::VerifyReport report = morl::verify_statistical(seed);
    std::cout << report.render();
    all_passed = all_passed && report.all_passed();
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank multitask representation learning simulator"};
  app.require_subcommand(1);

  morl::ExperimentConfig config;
  std::string config_path = find_config_path(argc, argv);
  try {
    if (!config_path.empty()) {
      config = morl::config_from_json(morl::read_text_file(config_path));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* gen = app.add_subcommand(
      "gen", "generate a task family, behavior policies, target, and dataset");
  std::uint64_t gen_seed = 0;
  int gen_episodes = 1000;
  add_experiment_flags(gen, config, config_path);
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--episodes", gen_episodes, "dataset episodes per task");

  CLI::App* upstream = app.add_subcommand(
      "upstream", "offline multitask representation learning sweep");
  CLI::App* rfe =
      app.add_subcommand("rfe", "reward-free exploration and planning sweep");
  CLI::App* offline =
      app.add_subcommand("offline", "pessimistic offline planning sweep");
  CLI::App* online =
      app.add_subcommand("online", "optimistic online learning sweep");
  CLI::App* sweep =
      app.add_subcommand("sweep", "run every experiment listed in the config");
  for (CLI::App* sub : {upstream, rfe, offline, online, sweep}) {
    add_experiment_flags(sub, config, config_path);
  }
  std::vector<std::string> sweep_experiments;
  sweep->add_option("--experiments", sweep_experiments,
                    "experiments to run (upstream, rfe, offline, online)");

  CLI::App* verify =
      app.add_subcommand("verify", "run the invariant verification battery");
  std::string verify_scope = "fast";
  std::uint64_t verify_seed = 0;
  std::string verify_mdp;
  verify->add_option("--scope", verify_scope, "fast, stat, or all")
      ->check(CLI::IsMember({"fast", "stat", "all"}));
  verify->add_option("--seed", verify_seed, "battery seed");
  verify->add_option("--mdp", verify_mdp,
                     "validate a serialized environment file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(config, gen_seed, gen_episodes);
    if (upstream->parsed()) return run_experiments(config, {"upstream"});
    if (rfe->parsed()) return run_experiments(config, {"rfe"});
    if (offline->parsed()) return run_experiments(config, {"offline"});
    if (online->parsed()) return run_experiments(config, {"online"});
    if (sweep->parsed()) {
      if (sweep_experiments.empty() && config.experiments.empty()) {
        sweep_experiments = {"upstream", "rfe", "offline", "online"};
      }
      return run_experiments(config, sweep_experiments);
    }
    if (verify->parsed()) {
      return run_verify(verify_scope, verify_seed, verify_mdp);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
