#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here recomputes results from first principles (scalar loops, exhaustive
// enumeration) so the library under test is never used to check itself.

#include <cmath>
#include <cstdint>
#include <vector>

#include "morl/data.hpp"
#include "morl/generators.hpp"
#include "morl/mdp.hpp"
#include "morl/rng.hpp"

namespace test_support {

inline morl::TaskFamily seed0_family(int num_tasks = 4) {
  morl::Rng rng(morl::derive_seed(0, morl::stream::family, 0));
  return morl::gen_task_family(5, 2, 3, 2, num_tasks, rng);
}

inline morl::StochasticPolicy uniform_policy(int num_states, int num_actions,
                                             int horizon) {
  morl::StochasticPolicy policy;
  policy.prob.assign(
      horizon, morl::Mat::Constant(num_states, num_actions,
                                   1.0 / static_cast<double>(num_actions)));
  return policy;
}

inline morl::StochasticPolicy random_policy(int num_states, int num_actions,
                                            int horizon, morl::Rng& rng) {
  morl::StochasticPolicy policy;
  policy.prob.reserve(horizon);
  for (int h = 0; h < horizon; ++h) {
    morl::Mat m(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) {
      m.row(s) = rng.simplex(num_actions).transpose();
    }
    policy.prob.push_back(std::move(m));
  }
  return policy;
}

inline morl::DeterministicPolicy random_deterministic_policy(int num_states,
                                                             int num_actions,
                                                             int horizon,
                                                             morl::Rng& rng) {
  morl::DeterministicPolicy policy;
  policy.action.assign(horizon, std::vector<int>(num_states, 0));
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      policy.action[h][s] = rng.uniform_int(num_actions);
    }
  }
  return policy;
}

inline morl::RewardTable random_reward(int num_states, int num_actions,
                                       int horizon, morl::Rng& rng) {
  morl::RewardTable reward;
  reward.reserve(horizon);
  for (int h = 0; h < horizon; ++h) {
    morl::Mat m(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) m(s, a) = rng.uniform();
    }
    reward.push_back(std::move(m));
  }
  return reward;
}

inline morl::RewardTable constant_reward(int num_states, int num_actions,
                                         int horizon, double value) {
  return morl::RewardTable(horizon,
                           morl::Mat::Constant(num_states, num_actions, value));
}

// Scalar-loop policy evaluation, written without any library DP code:
// V_H = 0; V_h(s) = sum_a pi(a|s) [r + sum_s' P(s'|s,a) V_{h+1}(s')].
inline double oracle_value(const morl::TransitionModel& model,
                           const morl::RewardTable& reward,
                           const morl::StochasticPolicy& policy,
                           int initial_state) {
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  std::vector<double> v(S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    std::vector<double> v_prev(S, 0.0);
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < K; ++a) {
        double q = reward[h](s, a);
        for (int sp = 0; sp < S; ++sp) {
          q += model.p[h](s * K + a, sp) * v[sp];
        }
        vs += policy.prob[h](s, a) * q;
      }
      v_prev[s] = vs;
    }
    v = v_prev;
  }
  return v[initial_state];
}

inline double oracle_value(const morl::TransitionModel& model,
                           const morl::RewardTable& reward,
                           const morl::DeterministicPolicy& policy,
                           int initial_state) {
  morl::StochasticPolicy stochastic;
  stochastic.prob.assign(model.horizon,
                         morl::Mat::Zero(model.num_states, model.num_actions));
  for (int h = 0; h < model.horizon; ++h) {
    for (int s = 0; s < model.num_states; ++s) {
      stochastic.prob[h](s, policy.action[h][s]) = 1.0;
    }
  }
  return oracle_value(model, reward, stochastic, initial_state);
}

// Best deterministic-policy value by full enumeration over K^(S*H)
// policies. Only usable for tiny instances; the caller is responsible for
// keeping the count sane.
inline double enumerate_best_value(const morl::TransitionModel& model,
                                   const morl::RewardTable& reward,
                                   int initial_state) {
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  const int cells = S * H;
  std::uint64_t total = 1;
  for (int i = 0; i < cells; ++i) total *= static_cast<std::uint64_t>(K);
  double best = -1e300;
  morl::DeterministicPolicy policy;
  policy.action.assign(H, std::vector<int>(S, 0));
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t rest = code;
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        policy.action[h][s] = static_cast<int>(rest % K);
        rest /= K;
      }
    }
    best = std::max(best, oracle_value(model, reward, policy, initial_state));
  }
  return best;
}

inline morl::OfflineDataset collect_dataset(
    const morl::TaskFamily& family,
    const std::vector<morl::StochasticPolicy>& behaviors, int episodes,
    std::uint64_t seed) {
  morl::Rng rng(morl::derive_seed(seed, morl::stream::dataset));
  return morl::gen_dataset(family, behaviors, episodes, rng);
}

inline std::vector<morl::StochasticPolicy> family_behaviors(
    const morl::TaskFamily& family, double min_action_prob,
    std::uint64_t seed) {
  std::vector<morl::StochasticPolicy> behaviors;
  for (int t = 0; t < family.num_tasks(); ++t) {
    morl::Rng rng(morl::derive_seed(seed, morl::stream::behavior,
                                    static_cast<std::uint64_t>(t), 0));
    behaviors.push_back(
        morl::gen_behavior_policy(family.tasks[t], min_action_prob, rng)
            .first);
  }
  return behaviors;
}

}  // namespace test_support
