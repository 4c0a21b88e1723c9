#pragma once

#include <utility>
#include <vector>

#include "morl/data.hpp"
#include "morl/mdp.hpp"
#include "morl/model_class.hpp"

namespace morl {

// A set of tasks sharing one feature table bit-exactly; kernels differ only
// through the per-task factors, rewards are task-specific.
struct TaskFamily {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int rank = 0;
  std::vector<TabularLowRankMdp> tasks;

  int num_tasks() const { return static_cast<int>(tasks.size()); }
  const FeatureTable& shared_phi() const { return tasks.at(0).phi; }
};

// Measured coverage of a behavior policy on one task: omega is the largest
// inverse action probability, kappa the smallest marginal state occupancy
// over (h, s). kappa = 0 means some state is unreachable; that is reported,
// not treated as an error.
struct CoverageCertificate {
  double omega = 1.0;
  double kappa = 0.0;
  bool fully_reachable = false;
};

CoverageCertificate aggregate_coverage(
    const std::vector<CoverageCertificate>& certs);

// How the downstream target kernel was assembled from the family: convex
// combination coefficients, their L1 bound, and the achieved perturbation
// level xi = max over (h,s,a) of the TV distance between the target kernel
// and the pure combination.
struct TargetTaskSpec {
  Vec coeffs;
  double c_l = 1.0;
  double xi = 0.0;
  double perturb_weight = 0.0;
};

// Random family with features on the d-simplex and per-task factors stored
// as d probability rows, which makes every induced kernel valid by
// construction. Rewards are uniform in [0,1].
TaskFamily gen_task_family(int num_states, int num_actions, int horizon,
                           int rank, int num_tasks, Rng& rng);

// Softmax policy mixed with the uniform policy at weight K*min_action_prob,
// so every action keeps probability at least min_action_prob. The
// certificate is measured, never assumed.
std::pair<StochasticPolicy, CoverageCertificate> gen_behavior_policy(
    const TabularLowRankMdp& mdp, double min_action_prob, Rng& rng);

// Finite realizable class: candidate 0 of phis is the true shared feature
// table (bit-exact) and candidates 0..T-1 of psis are the true per-task
// factors. Decoys mix the truth with fresh simplex draws at weight
// perturb_scale * scale_decay^level; scale_decay = 1 keeps all decoys at one
// perturbation level, smaller values lay a geometric ladder of finer and
// finer decoys (useful when model-selection error should shrink smoothly
// with sample size). Factor-decoy levels advance once per round-robin pass
// over the tasks.
ModelClass gen_model_class(const TaskFamily& family, int num_phi_decoys,
                           int num_psi_decoys, double perturb_scale, Rng& rng,
                           double scale_decay = 1.0);

// Target task: factors are (1-w) * sum_t c_t mu^t + w * fresh, so the
// kernel is the same convex combination of task kernels perturbed toward a
// fresh kernel sharing the family's features. Rewards are linear in the
// shared features, clipped to [0,1]. Throws unless coeffs is a probability
// vector and w is in [0,1).
std::pair<TabularLowRankMdp, TargetTaskSpec> gen_target_task(
    const TaskFamily& family, const Vec& coeffs, double perturbation_weight,
    Rng& rng);

// Reward table r_h(s,a) = clip(<phi_h(s,a), theta_h>, 0, 1) with theta_h
// drawn uniformly from the unit ball. num_actions splits the feature rows
// (laid out s*K+a) back into an S x K table.
RewardTable gen_linear_reward(const FeatureTable& phi, int num_actions,
                              Rng& rng);

// n full episodes per task under the per-task behavior policies.
OfflineDataset gen_dataset(const TaskFamily& family,
                           const std::vector<StochasticPolicy>& behavior,
                           int episodes, Rng& rng);

// n full episodes of a single environment (used for downstream offline
// data); the result has num_tasks = 1.
OfflineDataset gen_single_task_dataset(const TabularLowRankMdp& env,
                                       const StochasticPolicy& behavior,
                                       int episodes, Rng& rng);

// Measured constant of the pointwise-vs-average TV comparison: the largest
// ratio, over sampled candidate-kernel pairs and steps, of the max over
// (s,a) to the mean over (s,a) of the rowwise TV distance. max_pairs caps
// the number of sampled pairs for large classes; sampling is seeded and
// deterministic.
double measure_c_r(const ModelClass& model_class, int max_pairs = 256);

}  // namespace morl
