#pragma once

#include <vector>

#include "morl/data.hpp"
#include "morl/downstream.hpp"
#include "morl/mdp.hpp"

namespace morl {

struct PeviConfig {
  double lambda_d = 1.0;
  double beta = 0.0;
  double xi_down = 0.0;
  double delta = 0.1;
};

// beta = c_beta (H d sqrt(iota) + H sqrt(d N_off) xi_down) with
// iota = log(H d max(N_off,1) max(xi_down,1) / delta).
double beta_pevi(int horizon, int rank, int n_off, double delta,
                 double xi_down, double c_beta = 1.0);

struct PeviResult {
  DeterministicPolicy policy;
  ValueTable values;                // clipped pessimistic Q-hat / V-hat
  std::vector<Mat> gamma;           // per h, S x K penalty tables
  double kappa_rho = 0.0;           // min_h lambda_min of mean phi phi'
  double refined_bound = 0.0;       // 0 when kappa_rho = 0
};

// Pessimistic value iteration over the target task's offline data (task 0
// of the dataset): ridge regression of r + V-hat, elliptical penalty
// Gamma = H xi_down + beta * bonus, clipped pessimistic backup.
PeviResult pevi(const OfflineDataset& data, const FeatureTable& phi_hat,
                const PeviConfig& config);

struct LsviConfig {
  double lambda_d = 1.0;
  double c_beta = 1.0;
  double xi_down = 0.0;
  double c_l = 1.0;
  double delta = 0.1;
  int episodes = 1;  // N_on
};

// Per-episode bonus scale: beta_n = c_beta (H d sqrt(iota_n) +
// H sqrt(d n) xi_down + C_L sqrt(H d)), iota_n = log(H d n
// max(xi_down,1) / delta).
double beta_lsvi(int horizon, int rank, int episode, double delta,
                 double xi_down, double c_l, double c_beta = 1.0);

struct LsviResult {
  std::vector<DeterministicPolicy> policies;   // one per episode
  std::vector<double> episode_values;          // exact DP value of each policy
  double mixture_value = 0.0;                  // mean of episode_values
  double optimal_value = 0.0;                  // exact DP optimum
  std::vector<std::vector<Mat>> qhat_trace;    // [n][h], S x K, for monitors
};

// Optimistic value iteration with greedy rollouts against the true
// environment; the reward is a known table. Returns every episode policy,
// the exact value of each (so regret is exact), and the uniform-mixture
// value, which for a fixed initial distribution is the mean of member
// values.
LsviResult lsvi_ucb(const TabularLowRankMdp& env, const FeatureTable& phi_hat,
                    const RewardTable& reward, const LsviConfig& config,
                    Rng& rng);

// Counts (n,h,s,a) entries where the optimistic Q-value drops below
// Q*(s,a) - 2 H (H-h) xi_down - tolerance for zero-based h: the error
// budget of the approximate-feature backup shrinks toward the horizon.
long optimism_violations(const LsviResult& run, const TabularLowRankMdp& env,
                         const RewardTable& reward, double xi_down,
                         double tolerance = 1e-6);

}  // namespace morl
