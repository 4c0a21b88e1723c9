#include "morl/data.hpp"

#include <stdexcept>

namespace morl {

OfflineDataset OfflineDataset::empty(int num_tasks, int horizon,
                                     int num_states, int num_actions) {
  if (num_tasks < 1 || horizon < 1 || num_states < 1 || num_actions < 1) {
    throw std::invalid_argument("dataset dimensions must be positive");
  }
  OfflineDataset data;
  data.num_tasks = num_tasks;
  data.horizon = horizon;
  data.episodes = 0;
  data.num_states = num_states;
  data.num_actions = num_actions;
  data.tuples.assign(num_tasks, std::vector<std::vector<Transition>>(horizon));
  data.counts_.assign(
      num_tasks,
      std::vector<Mat>(horizon,
                       Mat::Zero(num_states * num_actions, num_states)));
  return data;
}

void OfflineDataset::append_episode(int task, const Trajectory& episode) {
  if (task < 0 || task >= num_tasks) {
    throw std::out_of_range("task index out of range");
  }
  if (static_cast<int>(episode.size()) != horizon) {
    throw std::invalid_argument("episode length does not match horizon");
  }
  for (const Step& step : episode) {
    if (step.h < 0 || step.h >= horizon || step.state < 0 ||
        step.state >= num_states || step.action < 0 ||
        step.action >= num_actions || step.next_state < 0 ||
        step.next_state >= num_states) {
      throw std::invalid_argument("episode step out of range");
    }
    tuples[task][step.h].push_back(
        {step.state, step.action, step.reward, step.next_state});
    counts_[task][step.h](sa(step.state, step.action), step.next_state) += 1.0;
  }
  if (task == 0) {
    episodes = static_cast<int>(tuples[0][0].size());
  }
}

void OfflineDataset::rebuild_counts() {
  counts_.assign(
      num_tasks,
      std::vector<Mat>(horizon,
                       Mat::Zero(num_states * num_actions, num_states)));
  for (int t = 0; t < num_tasks; ++t) {
    for (int h = 0; h < horizon; ++h) {
      for (const Transition& tr : tuples[t][h]) {
        counts_[t][h](sa(tr.state, tr.action), tr.next_state) += 1.0;
      }
    }
  }
  episodes = tuples.empty() ? 0 : static_cast<int>(tuples[0][0].size());
}

}  // namespace morl
