#pragma once

#include <vector>

#include "morl/downstream.hpp"
#include "morl/mdp.hpp"

namespace morl {

struct RfeConfig {
  int episodes = 1;  // K_RFE
  double beta = 0.0;
  double delta = 0.1;
  double epsilon = 0.1;
  double c_l = 1.0;
  double xi_down = 0.0;
  // When set, each episode also computes the truncated optimal value of
  // that episode's bonus reward under the true environment, for the
  // optimism monitor.
  bool track_optimism = false;
};

// Exploration bonus scale: C_L H sqrt(d) + d H sqrt(log(d K H
// max(xi_down,1)/delta)) + H xi_down sqrt(d K), each term with constant 1.
double beta_rfe(int horizon, int rank, int episodes, double delta, double c_l,
                double xi_down);

struct RfeTransition {
  int state = 0;
  int action = 0;
  int next_state = 0;
};

// Exploration log: the collected (s,a) pairs (next states are stored too,
// since the in-episode regression targets are evaluated there) and the
// per-step ridge accumulations over all episodes.
struct RfeDataset {
  int episodes = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<std::vector<RfeTransition>> tuples;  // [k][h]
  std::vector<RidgeState> ridge;                   // per h, over all episodes
};

struct RfeTrace {
  std::vector<double> vhat_initial;   // per episode, V-hat_1(s_1)
  std::vector<std::vector<double>> bonus_visited;  // [k][h], u at visited pair
  // Truncated optimal value of the episode's bonus reward at s_1 (only when
  // track_optimism); optimism asks trunc_opt <= vhat_initial + tolerance.
  std::vector<double> trunc_opt_initial;
};

struct RfeExploreResult {
  RfeDataset data;
  RfeTrace trace;
};

// Reward-free exploration: each episode runs a backward pass with the bonus
// as reward (so targets are purely exploration-driven), then rolls the
// greedy policy out in the true environment.
RfeExploreResult rfe_explore(const TabularLowRankMdp& env,
                             const FeatureTable& phi_hat,
                             const RfeConfig& config, Rng& rng);

struct RfePlanResult {
  DeterministicPolicy policy;
  ValueTable values;  // Q-hat / V-hat of the planning pass
};

// Planning pass for a revealed reward over the full exploration dataset:
// clipped bonus, ridge backup, greedy policy.
RfePlanResult rfe_plan(const RfeDataset& data, const FeatureTable& phi_hat,
                       const RewardTable& reward, double beta);

}  // namespace morl
