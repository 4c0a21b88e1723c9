#pragma once

#include <vector>

#include "morl/mdp.hpp"

namespace morl {

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};

// Episode tuples grouped by task and step: tuples[t][h] holds the step-h
// transition of every episode of task t, in episode order. The count
// matrices aggregate the same data per (t, h) cell for fast likelihood and
// covariance evaluation; rebuild_counts() restores them after any direct
// mutation of tuples.
struct OfflineDataset {
  int num_tasks = 0;
  int horizon = 0;
  int episodes = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<std::vector<std::vector<Transition>>> tuples;

  static OfflineDataset empty(int num_tasks, int horizon, int num_states,
                              int num_actions);

  void append_episode(int task, const Trajectory& episode);
  void rebuild_counts();

  // (S*K) x S matrix of visit counts for task t at step h.
  const Mat& counts(int t, int h) const { return counts_[t][h]; }

  int sa(int s, int a) const { return s * num_actions + a; }

 private:
  std::vector<std::vector<Mat>> counts_;
};

}  // namespace morl
