#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "morl/upstream.hpp"

namespace morl {

// One JSON-configurable experiment batch. Defaults describe the small
// reference setup used throughout the test suites.
struct ExperimentConfig {
  // family
  int num_states = 5;
  int num_actions = 2;
  int horizon = 3;
  int rank = 2;
  int num_tasks = 4;
  // model class
  int phi_decoys = 7;
  int psi_decoys = 8;
  double perturb_scale = 0.2;
  double scale_decay = 1.0;
  // behavior policies
  double min_action_prob = 0.25;
  double kappa_min = 0.0;  // family filter for downstream pipelines
  // target task
  double perturb_weight = 0.0;
  // algorithm constants
  std::string lambda_mode = "theory";  // theory | manual
  double lambda_const = 1.0;           // multiplier in theory mode
  double lambda_manual = 1.0;
  std::string alpha_mode = "theory";  // theory | manual
  double alpha_manual = 0.0;
  double c_beta = 1.0;
  double delta = 0.1;
  double lambda_d = 1.0;
  std::string xi_down_mode = "measured";  // measured | lemma | manual
  double xi_down_manual = 0.0;
  int n_upstream = 10000;  // upstream episodes per task for downstream runs
  int num_rewards = 10;    // revealed rewards per RFE planning evaluation
  // sweep grids
  std::vector<int> n_grid;      // upstream episodes per task
  std::vector<int> t_grid;      // task counts (upstream only; empty = fixed T)
  std::vector<int> k_rfe_grid;  // exploration episodes
  std::vector<int> n_off_grid;  // offline episodes
  std::vector<int> n_on_grid;   // online episodes
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> experiments;  // upstream | rfe | offline | online
  std::string out_dir = ".";
  std::string tag = "run";
  int threads = 1;

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string to_json(const ExperimentConfig& config);

struct UpstreamRow {
  std::uint64_t seed = 0;
  int n = 0;
  int num_tasks = 0;
  int h = 0;
  double avg_tv = 0.0;
  double tv_bound = 0.0;
  double subopt = 0.0;
  double subopt_bound = 0.0;
  double pessimism_gap = 0.0;
  double pessimism_bound = 0.0;
  double c_star = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double zeta_n = 0.0;
  std::string error;
};

struct RfeRow {
  std::uint64_t seed = 0;
  int k_rfe = 0;
  int reward_index = 0;
  double subopt = 0.0;
  double beta = 0.0;
  double xi_down = 0.0;
  std::string error;
};

struct OfflineRow {
  std::uint64_t seed = 0;
  int n_off = 0;
  double subopt = 0.0;
  double beta = 0.0;
  double xi_down = 0.0;
  double kappa_rho = 0.0;
  double refined_bound = 0.0;
  std::string error;
};

struct OnlineRow {
  std::uint64_t seed = 0;
  int n_on = 0;
  double avg_regret = 0.0;
  double mixture_value = 0.0;
  double optimal_value = 0.0;
  long violations = 0;
  std::string error;
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

struct SweepResult {
  std::vector<UpstreamRow> upstream;
  std::vector<RfeRow> rfe;
  std::vector<OfflineRow> offline;
  std::vector<OnlineRow> online;
  // Named scaling fits, e.g. "upstream.avg_tv_vs_nT" when computable.
  std::map<std::string, SlopeFit> slopes;
};

// Runs every requested experiment over its grid and the seed list. Jobs are
// pure functions of (config, seed, grid point); with threads > 1 they run
// in a pool and the rows are merged in deterministic key order, so results
// never depend on scheduling. Per-job failures are recorded in the row's
// error column instead of aborting the sweep.
SweepResult run_sweep(const ExperimentConfig& config);

// Deterministic CSV renderings (header + rows, '\n' separators, floats with
// up to 17 significant digits).
std::string upstream_csv(const std::vector<UpstreamRow>& rows);
std::string rfe_csv(const std::vector<RfeRow>& rows);
std::string offline_csv(const std::vector<OfflineRow>& rows);
std::string online_csv(const std::vector<OnlineRow>& rows);

// Writes one CSV per requested experiment into out_dir, named
// <experiment>_<tag>.csv; returns the file paths.
std::vector<std::string> write_sweep_csv(const SweepResult& result,
                                         const ExperimentConfig& config);

// OLS fit of log y on log x. Requires at least 3 strictly positive points;
// stderr is the usual slope standard error (0 for an exact fit).
SlopeFit fit_loglog_slope(const std::vector<double>& x,
                          const std::vector<double>& y);

double median(std::vector<double> values);

}  // namespace morl
