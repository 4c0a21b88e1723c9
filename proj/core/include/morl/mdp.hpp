#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "morl/rng.hpp"

namespace morl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Per-step feature table: element h is an (S*K) x d matrix whose row s*K+a
// holds the feature vector of the state-action pair (s, a) at step h.
using FeatureTable = std::vector<Mat>;

// Per-step factor table: element h is a d x S matrix whose column s' holds
// the factor vector of next state s' at step h. Row j of the matrix is the
// j-th factor's (sub)distribution over next states.
using FactorTable = std::vector<Mat>;

// Per-step reward table: element h is an S x K matrix. Environment rewards
// lie in [0, 1]; planners also accept shifted tables (e.g. penalized
// rewards), which may be negative.
using RewardTable = std::vector<Mat>;

// Raw transition kernels: element h is an (S*K) x S row-stochastic matrix.
struct TransitionModel {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<Mat> p;

  int sa(int s, int a) const { return s * num_actions + a; }
};

// Finite-horizon tabular MDP whose kernels factor through a rank-d inner
// product: P_h(s'|s,a) = <phi_h(s,a), mu_h(s')>. Feature vectors have
// Euclidean norm at most 1 and the factors integrate any [0,1] test
// function to a vector of norm at most sqrt(d); validate() checks both
// along with row-stochasticity of the induced kernels.
struct TabularLowRankMdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int rank = 0;
  int initial_state = 0;
  Vec initial_dist;  // optional; empty means point mass at initial_state
  FeatureTable phi;
  FactorTable mu;
  RewardTable reward;

  int sa(int s, int a) const { return s * num_actions + a; }

  // Transition distribution over next states for (h, s, a). Negative inner
  // products of magnitude at most 1e-12 are clamped to zero (renormalizing
  // when any mass was removed); anything more negative throws, since the
  // instance then violates the model invariants.
  Vec transition_distribution(int h, int s, int a) const;

  // Materializes all kernels, applying the same clamp rule per row.
  TransitionModel kernels() const;

  // Initial state distribution (point mass unless initial_dist is set).
  Vec initial_distribution() const;

  // Returns human-readable descriptions of every violated invariant;
  // empty means the instance is valid.
  std::vector<std::string> validate() const;
  bool is_valid() const { return validate().empty(); }
};

struct DeterministicPolicy {
  // action[h][s]
  std::vector<std::vector<int>> action;
};

struct StochasticPolicy {
  // prob[h] is S x K, each row a distribution over actions
  std::vector<Mat> prob;
};

struct Step {
  int h = 0;
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
};
using Trajectory = std::vector<Step>;

// Backward-induction output. v has horizon+1 entries (the last all zero);
// q has horizon entries of shape S x K.
struct ValueTable {
  std::vector<Vec> v;
  std::vector<Mat> q;
};

struct PlanResult {
  DeterministicPolicy policy;
  ValueTable values;
};

// Exact policy evaluation by backward induction. Throws on NaN rewards and
// on shape mismatches between model, rewards, and policy.
ValueTable evaluate_policy(const TransitionModel& model,
                           const RewardTable& reward,
                           const DeterministicPolicy& policy);
ValueTable evaluate_policy(const TransitionModel& model,
                           const RewardTable& reward,
                           const StochasticPolicy& policy);

// Optimal finite-horizon plan. Argmax ties break toward the lowest action
// index, so the result is fully deterministic.
PlanResult optimal_plan(const TransitionModel& model,
                        const RewardTable& reward);

// Backward induction that caps the state value at `cap` after each maximum,
// i.e. V_h(s) = min(max_a Q_h(s,a), cap) with Q = r + P V_{h+1}.
ValueTable truncated_optimal_values(const TransitionModel& model,
                                    const RewardTable& reward, double cap);

// State-action occupancy d_h(s,a) of a policy, one S x K matrix per step.
// Each matrix sums to 1 up to rounding.
std::vector<Mat> occupancy_measures(const TransitionModel& model,
                                    const DeterministicPolicy& policy,
                                    const Vec& initial);
std::vector<Mat> occupancy_measures(const TransitionModel& model,
                                    const StochasticPolicy& policy,
                                    const Vec& initial);

// Rolls out one episode; rewards are read from the environment table.
Trajectory sample_episode(const TabularLowRankMdp& env,
                          const DeterministicPolicy& policy, Rng& rng);
Trajectory sample_episode(const TabularLowRankMdp& env,
                          const StochasticPolicy& policy, Rng& rng);

// Total variation distance between two distributions: half the L1 norm of
// the difference.
double tv_distance(const Eigen::Ref<const Vec>& p,
                   const Eigen::Ref<const Vec>& q);

// Both exact expansions of the difference in initial values of one policy
// under two models. lhs = V_1(P1,r1) - V_1(P2,r2) at the initial
// distribution; rhs_under_p2 expands with occupancies of (P2, policy) and
// continuation values of (P1, r1); rhs_under_p1 swaps the two roles. Both
// right-hand sides equal lhs exactly, up to rounding.
struct SimulationLemmaSides {
  double lhs = 0.0;
  double rhs_under_p2 = 0.0;
  double rhs_under_p1 = 0.0;
};
SimulationLemmaSides simulation_lemma_sides(const TransitionModel& p1,
                                            const RewardTable& r1,
                                            const TransitionModel& p2,
                                            const RewardTable& r2,
                                            const StochasticPolicy& policy,
                                            const Vec& initial);

// Expected value of a value table at an initial distribution.
double initial_value(const ValueTable& values, const Vec& initial);

}  // namespace morl
