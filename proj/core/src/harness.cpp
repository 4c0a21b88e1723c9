#include "morl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "morl/downstream.hpp"
#include "morl/offline_online.hpp"
#include "morl/rfe.hpp"
#include "morl/serialization.hpp"

namespace morl {
namespace {

using Json = nlohmann::ordered_json;

constexpr int kMaxFamilyAttempts = 32;
// Sub-label for target-task draws, outside any plausible task index range.
constexpr std::uint64_t kTargetLabel = 1000000;

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

bool wants(const ExperimentConfig& config, const std::string& name) {
  return std::find(config.experiments.begin(), config.experiments.end(),
                   name) != config.experiments.end();
}

std::vector<int> grid_or(const std::vector<int>& grid, int fallback) {
  if (!grid.empty()) return grid;
  return {fallback};
}

struct FamilySetup {
  TaskFamily family;
  std::vector<StochasticPolicy> behaviors;
  std::vector<CoverageCertificate> certs;
  CoverageCertificate agg;
};

// Regenerates family and behavior policies until the joint state coverage
// clears the configured floor, keeping the best attempt if none does. Every
// attempt is seeded by its index, so the loop is deterministic.
FamilySetup make_family(const ExperimentConfig& config, std::uint64_t seed,
                        int num_tasks) {
  FamilySetup best;
  double best_kappa = -1.0;
  for (std::uint64_t attempt = 0; attempt < kMaxFamilyAttempts; ++attempt) {
    FamilySetup setup;
    Rng family_rng(derive_seed(seed, stream::family, attempt));
    setup.family = gen_task_family(config.num_states, config.num_actions,
                                   config.horizon, config.rank, num_tasks,
                                   family_rng);
    setup.behaviors.reserve(num_tasks);
    setup.certs.reserve(num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      Rng behavior_rng(
          derive_seed(seed, stream::behavior, static_cast<std::uint64_t>(t),
                      attempt));
      auto [policy, cert] = gen_behavior_policy(
          setup.family.tasks[t], config.min_action_prob, behavior_rng);
      setup.behaviors.push_back(std::move(policy));
      setup.certs.push_back(cert);
    }
    setup.agg = aggregate_coverage(setup.certs);
    if (setup.agg.kappa >= config.kappa_min) return setup;
    if (setup.agg.kappa > best_kappa) {
      best_kappa = setup.agg.kappa;
      best = std::move(setup);
    }
  }
  return best;
}

double resolve_lambda(const ExperimentConfig& config, const ModelClass& mc,
                      int num_tasks, int n) {
  if (config.lambda_mode == "manual") return config.lambda_manual;
  return lambda_from_theory(config.lambda_const, mc.size_phi(), mc.size_psi(),
                            num_tasks, n, config.horizon, config.delta);
}

AlphaMode resolve_alpha(const ExperimentConfig& config, double omega) {
  if (config.alpha_mode == "manual") {
    return AlphaManual{config.alpha_manual};
  }
  return AlphaTheory{omega, config.delta};
}

struct DownstreamPrep {
  FeatureTable phi_hat;
  TabularLowRankMdp target;
  TargetTaskSpec spec;
  double xi_down_value = 0.0;
  double kappa = 0.0;
};

DownstreamPrep make_downstream_prep(const ExperimentConfig& config,
                                    std::uint64_t seed) {
  const int T = config.num_tasks;
  FamilySetup setup = make_family(config, seed, T);

  Rng class_rng(derive_seed(seed, stream::model_class));
  const ModelClass mc =
      gen_model_class(setup.family, config.phi_decoys, config.psi_decoys,
                      config.perturb_scale, class_rng, config.scale_decay);
  Rng data_rng(derive_seed(seed, stream::dataset));
  const OfflineDataset data =
      gen_dataset(setup.family, setup.behaviors, config.n_upstream, data_rng);

  std::vector<RewardTable> rewards;
  rewards.reserve(T);
  for (int t = 0; t < T; ++t) rewards.push_back(setup.family.tasks[t].reward);

  const double lambda = resolve_lambda(config, mc, T, config.n_upstream);
  const MorlOutput out = run_morl(data, mc, rewards, lambda,
                                  resolve_alpha(config, setup.agg.omega));

  Rng target_rng(derive_seed(seed, stream::target));
  const Vec coeffs = Vec::Constant(T, 1.0 / static_cast<double>(T));
  auto [target, spec] =
      gen_target_task(setup.family, coeffs, config.perturb_weight, target_rng);

  DownstreamPrep prep;
  prep.phi_hat = out.learned.phi_hat;
  prep.target = std::move(target);
  prep.spec = spec;
  prep.kappa = setup.agg.kappa;
  if (config.xi_down_mode == "manual") {
    prep.xi_down_value = config.xi_down_manual;
  } else if (config.xi_down_mode == "lemma") {
    XiDownParams params;
    params.xi = spec.xi;
    params.c_l = spec.c_l;
    params.c_r = measure_c_r(mc);
    params.nu = 1.0 / static_cast<double>(config.num_states);
    params.kappa = setup.agg.kappa;
    params.num_tasks = T;
    params.n = config.n_upstream;
    params.size_phi = mc.size_phi();
    params.size_psi = mc.size_psi();
    params.horizon = config.horizon;
    params.delta = config.delta;
    prep.xi_down_value = xi_down(params).value;
  } else {
    prep.xi_down_value = approx_feature_error(prep.phi_hat, prep.target)
                             .max_error;
  }
  return prep;
}

struct SeedRows {
  std::vector<UpstreamRow> upstream;
  std::vector<RfeRow> rfe;
  std::vector<OfflineRow> offline;
  std::vector<OnlineRow> online;
};

void run_upstream_point(const ExperimentConfig& config, std::uint64_t seed,
                        int n, int num_tasks, std::vector<UpstreamRow>& rows) {
  try {
    FamilySetup setup = make_family(config, seed, num_tasks);
    Rng class_rng(derive_seed(seed, stream::model_class));
    const ModelClass mc =
        gen_model_class(setup.family, config.phi_decoys, config.psi_decoys,
                        config.perturb_scale, class_rng, config.scale_decay);
    Rng data_rng(derive_seed(seed, stream::dataset));
    const OfflineDataset data =
        gen_dataset(setup.family, setup.behaviors, n, data_rng);

    std::vector<RewardTable> rewards;
    rewards.reserve(num_tasks);
    for (int t = 0; t < num_tasks; ++t) {
      rewards.push_back(setup.family.tasks[t].reward);
    }
    const double lambda = resolve_lambda(config, mc, num_tasks, n);
    const MorlOutput out = run_morl(data, mc, rewards, lambda,
                                    resolve_alpha(config, setup.agg.omega));
    const UpstreamReport report = build_upstream_report(
        out, data, setup.family, setup.behaviors, setup.certs, rewards, mc,
        config.delta);

    for (int h = 0; h < config.horizon; ++h) {
      UpstreamRow row;
      row.seed = seed;
      row.n = n;
      row.num_tasks = num_tasks;
      row.h = h;
      row.avg_tv = report.avg_tv[h];
      row.tv_bound = report.tv_bound;
      row.subopt = report.avg_subopt;
      row.subopt_bound = report.subopt_bound;
      row.pessimism_gap = report.pessimism_gap;
      row.pessimism_bound = report.pessimism_bound;
      row.c_star = report.c_star;
      row.omega = report.omega;
      row.alpha = report.alpha;
      row.zeta_n = report.zeta_n;
      rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    UpstreamRow row;
    row.seed = seed;
    row.n = n;
    row.num_tasks = num_tasks;
    row.h = -1;
    row.error = e.what();
    rows.push_back(std::move(row));
  }
}

SeedRows run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  SeedRows rows;
  if (wants(config, "upstream")) {
    for (int n : grid_or(config.n_grid, config.n_upstream)) {
      for (int num_tasks : grid_or(config.t_grid, config.num_tasks)) {
        run_upstream_point(config, seed, n, num_tasks, rows.upstream);
      }
    }
  }

  const bool want_rfe = wants(config, "rfe");
  const bool want_offline = wants(config, "offline");
  const bool want_online = wants(config, "online");
  if (!want_rfe && !want_offline && !want_online) return rows;

  DownstreamPrep prep;
  std::string prep_error;
  try {
    prep = make_downstream_prep(config, seed);
  } catch (const std::exception& e) {
    prep_error = e.what();
  }

  const TransitionModel truth =
      prep_error.empty() ? prep.target.kernels() : TransitionModel{};
  const Vec init = prep_error.empty() ? prep.target.initial_distribution()
                                      : Vec();

  if (want_rfe) {
    for (int k : grid_or(config.k_rfe_grid, 1000)) {
      if (!prep_error.empty()) {
        RfeRow row;
        row.seed = seed;
        row.k_rfe = k;
        row.error = prep_error;
        rows.rfe.push_back(std::move(row));
        continue;
      }
      try {
        RfeConfig rfe_config;
        rfe_config.episodes = k;
        rfe_config.delta = config.delta;
        rfe_config.c_l = prep.spec.c_l;
        rfe_config.xi_down = prep.xi_down_value;
        rfe_config.beta = beta_rfe(config.horizon, config.rank, k,
                                   config.delta, prep.spec.c_l,
                                   prep.xi_down_value);
        Rng explore_rng(derive_seed(seed, stream::rfe));
        const RfeExploreResult explored =
            rfe_explore(prep.target, prep.phi_hat, rfe_config, explore_rng);
        for (int i = 0; i < config.num_rewards; ++i) {
          Rng reward_rng(
              derive_seed(seed, stream::reward, static_cast<std::uint64_t>(i)));
          const RewardTable reward = gen_linear_reward(
              prep.target.phi, config.num_actions, reward_rng);
          const RfePlanResult plan =
              rfe_plan(explored.data, prep.phi_hat, reward, rfe_config.beta);
          const double v_star =
              initial_value(optimal_plan(truth, reward).values, init);
          const double v_pi = initial_value(
              evaluate_policy(truth, reward, plan.policy), init);
          RfeRow row;
          row.seed = seed;
          row.k_rfe = k;
          row.reward_index = i;
          row.subopt = v_star - v_pi;
          row.beta = rfe_config.beta;
          row.xi_down = prep.xi_down_value;
          rows.rfe.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        RfeRow row;
        row.seed = seed;
        row.k_rfe = k;
        row.error = e.what();
        rows.rfe.push_back(std::move(row));
      }
    }
  }

  if (want_offline) {
    for (int n_off : grid_or(config.n_off_grid, 1000)) {
      if (!prep_error.empty()) {
        OfflineRow row;
        row.seed = seed;
        row.n_off = n_off;
        row.error = prep_error;
        rows.offline.push_back(std::move(row));
        continue;
      }
      try {
        Rng behavior_rng(derive_seed(seed, stream::behavior, kTargetLabel));
        auto [behavior, cert] = gen_behavior_policy(
            prep.target, config.min_action_prob, behavior_rng);
        Rng data_rng(derive_seed(seed, stream::dataset, kTargetLabel));
        const OfflineDataset off_data =
            gen_single_task_dataset(prep.target, behavior, n_off, data_rng);
        PeviConfig pevi_config;
        pevi_config.lambda_d = config.lambda_d;
        pevi_config.xi_down = prep.xi_down_value;
        pevi_config.delta = config.delta;
        pevi_config.beta = beta_pevi(config.horizon, config.rank, n_off,
                                     config.delta, prep.xi_down_value,
                                     config.c_beta);
        const PeviResult result = pevi(off_data, prep.phi_hat, pevi_config);
        const double v_star = initial_value(
            optimal_plan(truth, prep.target.reward).values, init);
        const double v_pi = initial_value(
            evaluate_policy(truth, prep.target.reward, result.policy), init);
        OfflineRow row;
        row.seed = seed;
        row.n_off = n_off;
        row.subopt = v_star - v_pi;
        row.beta = pevi_config.beta;
        row.xi_down = prep.xi_down_value;
        row.kappa_rho = result.kappa_rho;
        row.refined_bound = result.refined_bound;
        rows.offline.push_back(std::move(row));
      } catch (const std::exception& e) {
        OfflineRow row;
        row.seed = seed;
        row.n_off = n_off;
        row.error = e.what();
        rows.offline.push_back(std::move(row));
      }
    }
  }

  if (want_online) {
    for (int n_on : grid_or(config.n_on_grid, 1000)) {
      if (!prep_error.empty()) {
        OnlineRow row;
        row.seed = seed;
        row.n_on = n_on;
        row.error = prep_error;
        rows.online.push_back(std::move(row));
        continue;
      }
      try {
        LsviConfig lsvi_config;
        lsvi_config.lambda_d = config.lambda_d;
        lsvi_config.c_beta = config.c_beta;
        lsvi_config.xi_down = prep.xi_down_value;
        lsvi_config.c_l = prep.spec.c_l;
        lsvi_config.delta = config.delta;
        lsvi_config.episodes = n_on;
        Rng online_rng(derive_seed(seed, stream::online));
        const LsviResult result = lsvi_ucb(prep.target, prep.phi_hat,
                                           prep.target.reward, lsvi_config,
                                           online_rng);
        OnlineRow row;
        row.seed = seed;
        row.n_on = n_on;
        row.avg_regret = result.optimal_value - result.mixture_value;
        row.mixture_value = result.mixture_value;
        row.optimal_value = result.optimal_value;
        row.violations = optimism_violations(result, prep.target,
                                             prep.target.reward,
                                             prep.xi_down_value);
        rows.online.push_back(std::move(row));
      } catch (const std::exception& e) {
        OnlineRow row;
        row.seed = seed;
        row.n_on = n_on;
        row.error = e.what();
        rows.online.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Median over rows grouped by a key, for the scaling fits.
template <typename Row, typename Key, typename Value>
std::map<double, std::vector<double>> group_values(
    const std::vector<Row>& rows, Key key, Value value) {
  std::map<double, std::vector<double>> grouped;
  for (const Row& row : rows) {
    if (!row.error.empty()) continue;
    grouped[key(row)].push_back(value(row));
  }
  return grouped;
}

void maybe_fit(std::map<std::string, SlopeFit>& slopes, const std::string& name,
               const std::map<double, std::vector<double>>& grouped) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [key, values] : grouped) {
    std::vector<double> copy = values;
    const double med = median(std::move(copy));
    if (key > 0.0 && med > 0.0) {
      x.push_back(key);
      y.push_back(med);
    }
  }
  if (x.size() >= 3) slopes[name] = fit_loglog_slope(x, y);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_states < 1 || num_actions < 1 || horizon < 1 || rank < 1 ||
      num_tasks < 1) {
    throw std::invalid_argument("dimensions must be positive");
  }
  if (phi_decoys < 0 || psi_decoys < 0) {
    throw std::invalid_argument("decoy counts must be nonnegative");
  }
  if (perturb_scale < 0.0 || perturb_scale > 1.0) {
    throw std::invalid_argument("perturb_scale must lie in [0,1]");
  }
  if (scale_decay <= 0.0 || scale_decay > 1.0) {
    throw std::invalid_argument("scale_decay must lie in (0,1]");
  }
  if (min_action_prob < 0.0 ||
      min_action_prob * static_cast<double>(num_actions) > 1.0) {
    throw std::invalid_argument("min_action_prob must lie in [0, 1/K]");
  }
  if (perturb_weight < 0.0 || perturb_weight >= 1.0) {
    throw std::invalid_argument("perturb_weight must lie in [0,1)");
  }
  if (lambda_mode != "theory" && lambda_mode != "manual") {
    throw std::invalid_argument("lambda_mode must be theory or manual");
  }
  if (alpha_mode != "theory" && alpha_mode != "manual") {
    throw std::invalid_argument("alpha_mode must be theory or manual");
  }
  if (xi_down_mode != "measured" && xi_down_mode != "lemma" &&
      xi_down_mode != "manual") {
    throw std::invalid_argument(
        "xi_down_mode must be measured, lemma, or manual");
  }
  if (delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("delta must lie in (0,1)");
  }
  if (lambda_d <= 0.0) throw std::invalid_argument("lambda_d must be positive");
  if (lambda_mode == "theory" && lambda_const <= 0.0) {
    throw std::invalid_argument("lambda_const must be positive");
  }
  if (lambda_mode == "manual" && lambda_manual <= 0.0) {
    throw std::invalid_argument("lambda_manual must be positive");
  }
  if (c_beta < 0.0) throw std::invalid_argument("c_beta must be nonnegative");
  if (n_upstream < 1) throw std::invalid_argument("n_upstream must be >= 1");
  if (num_rewards < 1) throw std::invalid_argument("num_rewards must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (kappa_min < 0.0) throw std::invalid_argument("kappa_min must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("seed list must be nonempty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
      seeds.size()) {
    throw std::invalid_argument("seeds must be distinct");
  }
  if (experiments.empty()) {
    throw std::invalid_argument("no experiments requested");
  }
  for (const std::string& name : experiments) {
    if (name != "upstream" && name != "rfe" && name != "offline" &&
        name != "online") {
      throw std::invalid_argument("unknown experiment: " + name);
    }
  }
  auto check_grid = [](const std::vector<int>& grid, const char* name) {
    for (int v : grid) {
      if (v < 1) {
        throw std::invalid_argument(std::string(name) +
                                    " entries must be >= 1");
      }
    }
  };
  check_grid(n_grid, "n_grid");
  check_grid(t_grid, "t_grid");
  check_grid(k_rfe_grid, "k_rfe_grid");
  check_grid(n_off_grid, "n_off_grid");
  check_grid(n_on_grid, "n_on_grid");
}

ExperimentConfig config_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  ExperimentConfig config;
  for (const auto& [key, value] : j.items()) {
    if (key == "S") config.num_states = value.get<int>();
    else if (key == "K") config.num_actions = value.get<int>();
    else if (key == "H") config.horizon = value.get<int>();
    else if (key == "d") config.rank = value.get<int>();
    else if (key == "T") config.num_tasks = value.get<int>();
    else if (key == "phi_decoys") config.phi_decoys = value.get<int>();
    else if (key == "psi_decoys") config.psi_decoys = value.get<int>();
    else if (key == "perturb_scale") config.perturb_scale = value.get<double>();
    else if (key == "scale_decay") config.scale_decay = value.get<double>();
    else if (key == "min_action_prob")
      config.min_action_prob = value.get<double>();
    else if (key == "kappa_min") config.kappa_min = value.get<double>();
    else if (key == "perturb_weight")
      config.perturb_weight = value.get<double>();
    else if (key == "lambda_mode") config.lambda_mode = value.get<std::string>();
    else if (key == "lambda_const") config.lambda_const = value.get<double>();
    else if (key == "lambda_manual")
      config.lambda_manual = value.get<double>();
    else if (key == "alpha_mode") config.alpha_mode = value.get<std::string>();
    else if (key == "alpha_manual") config.alpha_manual = value.get<double>();
    else if (key == "c_beta") config.c_beta = value.get<double>();
    else if (key == "delta") config.delta = value.get<double>();
    else if (key == "lambda_d") config.lambda_d = value.get<double>();
    else if (key == "xi_down_mode")
      config.xi_down_mode = value.get<std::string>();
    else if (key == "xi_down_manual")
      config.xi_down_manual = value.get<double>();
    else if (key == "n_upstream") config.n_upstream = value.get<int>();
    else if (key == "num_rewards") config.num_rewards = value.get<int>();
    else if (key == "n_grid") config.n_grid = value.get<std::vector<int>>();
    else if (key == "t_grid") config.t_grid = value.get<std::vector<int>>();
    else if (key == "k_rfe_grid")
      config.k_rfe_grid = value.get<std::vector<int>>();
    else if (key == "n_off_grid")
      config.n_off_grid = value.get<std::vector<int>>();
    else if (key == "n_on_grid")
      config.n_on_grid = value.get<std::vector<int>>();
    else if (key == "seeds")
      config.seeds = value.get<std::vector<std::uint64_t>>();
    else if (key == "experiments")
      config.experiments = value.get<std::vector<std::string>>();
    else if (key == "out_dir") config.out_dir = value.get<std::string>();
    else if (key == "tag") config.tag = value.get<std::string>();
    else if (key == "threads") config.threads = value.get<int>();
    else throw std::invalid_argument("unknown config key: " + key);
  }
  return config;
}

std::string to_json(const ExperimentConfig& config) {
  Json j;
  j["S"] = config.num_states;
  j["K"] = config.num_actions;
  j["H"] = config.horizon;
  j["d"] = config.rank;
  j["T"] = config.num_tasks;
  j["phi_decoys"] = config.phi_decoys;
  j["psi_decoys"] = config.psi_decoys;
  j["perturb_scale"] = config.perturb_scale;
  j["scale_decay"] = config.scale_decay;
  j["min_action_prob"] = config.min_action_prob;
  j["kappa_min"] = config.kappa_min;
  j["perturb_weight"] = config.perturb_weight;
  j["lambda_mode"] = config.lambda_mode;
  j["lambda_const"] = config.lambda_const;
  j["lambda_manual"] = config.lambda_manual;
  j["alpha_mode"] = config.alpha_mode;
  j["alpha_manual"] = config.alpha_manual;
  j["c_beta"] = config.c_beta;
  j["delta"] = config.delta;
  j["lambda_d"] = config.lambda_d;
  j["xi_down_mode"] = config.xi_down_mode;
  j["xi_down_manual"] = config.xi_down_manual;
  j["n_upstream"] = config.n_upstream;
  j["num_rewards"] = config.num_rewards;
  j["n_grid"] = config.n_grid;
  j["t_grid"] = config.t_grid;
  j["k_rfe_grid"] = config.k_rfe_grid;
  j["n_off_grid"] = config.n_off_grid;
  j["n_on_grid"] = config.n_on_grid;
  j["seeds"] = config.seeds;
  j["experiments"] = config.experiments;
  j["out_dir"] = config.out_dir;
  j["tag"] = config.tag;
  j["threads"] = config.threads;
  return j.dump(2);
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const int num_seeds = static_cast<int>(config.seeds.size());
  std::vector<SeedRows> fragments(num_seeds);

  const int workers = std::min(config.threads, num_seeds);
  if (workers <= 1) {
    for (int i = 0; i < num_seeds; ++i) {
      fragments[i] = run_seed(config, config.seeds[i]);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const int i = next.fetch_add(1);
          if (i >= num_seeds) break;
          fragments[i] = run_seed(config, config.seeds[i]);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  // Fragments are merged in seed-list order, so parallel and serial runs
  // produce identical row sequences.
  SweepResult result;
  for (const SeedRows& fragment : fragments) {
    result.upstream.insert(result.upstream.end(), fragment.upstream.begin(),
                           fragment.upstream.end());
    result.rfe.insert(result.rfe.end(), fragment.rfe.begin(),
                      fragment.rfe.end());
    result.offline.insert(result.offline.end(), fragment.offline.begin(),
                          fragment.offline.end());
    result.online.insert(result.online.end(), fragment.online.begin(),
                         fragment.online.end());
  }

  maybe_fit(result.slopes, "upstream.avg_tv_vs_nT",
            group_values(
                result.upstream,
                [](const UpstreamRow& r) {
                  return static_cast<double>(r.n) * r.num_tasks;
                },
                [](const UpstreamRow& r) { return r.avg_tv; }));
  maybe_fit(result.slopes, "rfe.subopt_vs_k",
            group_values(
                result.rfe,
                [](const RfeRow& r) { return static_cast<double>(r.k_rfe); },
                [](const RfeRow& r) { return r.subopt; }));
  maybe_fit(result.slopes, "offline.subopt_vs_n",
            group_values(
                result.offline,
                [](const OfflineRow& r) { return static_cast<double>(r.n_off); },
                [](const OfflineRow& r) { return r.subopt; }));
  maybe_fit(result.slopes, "online.regret_vs_n",
            group_values(
                result.online,
                [](const OnlineRow& r) { return static_cast<double>(r.n_on); },
                [](const OnlineRow& r) { return r.avg_regret; }));
  return result;
}

std::string upstream_csv(const std::vector<UpstreamRow>& rows) {
  std::string out =
      "seed,n,T,h,avg_tv,tv_bound,subopt,subopt_bound,pessimism_gap,"
      "pessimism_bound,c_star,omega,alpha,zeta_n,error\n";
  for (const UpstreamRow& r : rows) {
    out += std::to_string(r.seed) + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.num_tasks) + ',' + std::to_string(r.h) + ',' +
           format_double(r.avg_tv) + ',' + format_double(r.tv_bound) + ',' +
           format_double(r.subopt) + ',' + format_double(r.subopt_bound) +
           ',' + format_double(r.pessimism_gap) + ',' +
           format_double(r.pessimism_bound) + ',' + format_double(r.c_star) +
           ',' + format_double(r.omega) + ',' + format_double(r.alpha) + ',' +
           format_double(r.zeta_n) + ',' + r.error + '\n';
  }
  return out;
}

std::string rfe_csv(const std::vector<RfeRow>& rows) {
  std::string out = "seed,k_rfe,reward_index,subopt,beta,xi_down,error\n";
  for (const RfeRow& r : rows) {
    out += std::to_string(r.seed) + ',' + std::to_string(r.k_rfe) + ',' +
           std::to_string(r.reward_index) + ',' + format_double(r.subopt) +
           ',' + format_double(r.beta) + ',' + format_double(r.xi_down) + ',' +
           r.error + '\n';
  }
  return out;
}

std::string offline_csv(const std::vector<OfflineRow>& rows) {
  std::string out =
      "seed,n_off,subopt,beta,xi_down,kappa_rho,refined_bound,error\n";
  for (const OfflineRow& r : rows) {
    out += std::to_string(r.seed) + ',' + std::to_string(r.n_off) + ',' +
           format_double(r.subopt) + ',' + format_double(r.beta) + ',' +
           format_double(r.xi_down) + ',' + format_double(r.kappa_rho) + ',' +
           format_double(r.refined_bound) + ',' + r.error + '\n';
  }
  return out;
}

std::string online_csv(const std::vector<OnlineRow>& rows) {
  std::string out =
      "seed,n_on,avg_regret,mixture_value,optimal_value,violations,error\n";
  for (const OnlineRow& r : rows) {
    out += std::to_string(r.seed) + ',' + std::to_string(r.n_on) + ',' +
           format_double(r.avg_regret) + ',' +
           format_double(r.mixture_value) + ',' +
           format_double(r.optimal_value) + ',' +
           std::to_string(r.violations) + ',' + r.error + '\n';
  }
  return out;
}

std::vector<std::string> write_sweep_csv(const SweepResult& result,
                                         const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  fs::path root(config.out_dir);
  if (root.is_relative()) {
    if (const char* env_root = std::getenv("MORL_OUT")) {
      root = fs::path(env_root) / root;
    }
  }
  fs::create_directories(root);

  std::vector<std::string> written;
  auto emit = [&](const std::string& experiment, const std::string& csv) {
    const fs::path path = root / (experiment + "_" + config.tag + ".csv");
    write_text_file(path.string(), csv);
    written.push_back(path.string());
  };
  if (wants(config, "upstream")) emit("upstream", upstream_csv(result.upstream));
  if (wants(config, "rfe")) emit("rfe", rfe_csv(result.rfe));
  if (wants(config, "offline")) emit("offline", offline_csv(result.offline));
  if (wants(config, "online")) emit("online", online_csv(result.online));
  return written;
}

SlopeFit fit_loglog_slope(const std::vector<double>& x,
                          const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw std::invalid_argument("slope fit needs at least 3 paired points");
  }
  const int m = static_cast<int>(x.size());
  std::vector<double> lx(m);
  std::vector<double> ly(m);
  for (int i = 0; i < m; ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) {
      throw std::invalid_argument("slope fit needs positive values");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (int i = 0; i < m; ++i) {
    mean_x += lx[i];
    mean_y += ly[i];
  }
  mean_x /= m;
  mean_y /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (int i = 0; i < m; ++i) {
    sxx += (lx[i] - mean_x) * (lx[i] - mean_x);
    sxy += (lx[i] - mean_x) * (ly[i] - mean_y);
  }
  if (sxx <= 0.0) throw std::invalid_argument("x values must not coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  const double intercept = mean_y - fit.slope * mean_x;
  double rss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double r = ly[i] - (intercept + fit.slope * lx[i]);
    rss += r * r;
  }
  fit.stderr_ = m > 2 ? std::sqrt(rss / (m - 2) / sxx) : 0.0;
  return fit;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m % 2 == 1) return values[m / 2];
  return 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace morl
