#pragma once

#include <vector>

#include "morl/data.hpp"
#include "morl/mdp.hpp"

namespace morl {

// Finite model class. Candidate order is fixed at construction; every
// (feature, factor) pair must induce valid kernels (the generator
// constructions guarantee this, validate_class() re-checks).
struct ModelClass {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int rank = 0;
  std::vector<FeatureTable> phis;
  std::vector<FactorTable> psis;

  int size_phi() const { return static_cast<int>(phis.size()); }
  int size_psi() const { return static_cast<int>(psis.size()); }
};

// Checks every candidate pair against the MDP invariant battery; returns
// violation messages, empty when clean.
std::vector<std::string> validate_class(const ModelClass& model_class);

// Result of the per-step maximum-likelihood selection.
struct MleSelection {
  int phi_index = 0;
  std::vector<int> mu_indices;  // one per task
  double loglik = 0.0;
};

// Model assembled from per-step selections: chosen candidate indices, the
// stitched feature/factor tables, per-task reconstructed kernels, and the
// total achieved log-likelihood (sum over steps).
struct LearnedModel {
  std::vector<int> phi_index;              // per h
  std::vector<std::vector<int>> mu_index;  // [t][h]
  FeatureTable phi_hat;
  std::vector<FactorTable> mu_hat;
  std::vector<TransitionModel> p_hat;
  double loglik = 0.0;

  int num_tasks() const { return static_cast<int>(mu_hat.size()); }
};

// Joint step-h log-likelihood of one feature candidate paired with one
// factor candidate per task: sum over tasks and step-h tuples of
// log <phi_h(s,a), mu_h^t(s')>. Any inner product at or below 1e-300 on an
// observed transition disqualifies the candidate (returns -infinity).
double joint_log_likelihood(const Mat& phi_h,
                            const std::vector<const Mat*>& mu_h_per_task,
                            const OfflineDataset& data, int h);

// Exact maximizer of the joint likelihood by enumeration. For a fixed
// feature candidate the objective is a sum of per-task terms, so the best
// factor is chosen independently per task; the brute-force test oracle
// validates this decomposition. Ties break toward the lowest candidate
// index. Throws when every feature candidate is disqualified.
MleSelection mle_fit(const ModelClass& model_class, const OfflineDataset& data,
                     int h);

// Assembles a LearnedModel from per-step selections, reconstructing the
// per-task kernels from the chosen candidates.
LearnedModel reconstruct_kernels(const ModelClass& model_class,
                                 const std::vector<MleSelection>& per_h);

// mle_fit for every step plus reconstruction.
LearnedModel fit_model(const ModelClass& model_class,
                       const OfflineDataset& data);

}  // namespace morl
