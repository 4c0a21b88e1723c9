#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "morl/generators.hpp"
#include "morl/model_class.hpp"

namespace morl {

// Ridge-regularized feature second-moment matrices, one per (task, step).
struct CovarianceState {
  double lambda = 1.0;
  std::vector<std::vector<Mat>> sigma;  // [t][h], d x d

  const Mat& at(int t, int h) const { return sigma[t][h]; }
};

// Clipped elliptical penalties b[t][h](s,a) = min(alpha * ||phi_hat(s,a)||
// in the inverse-covariance norm, 1).
struct PenaltyTable {
  double alpha = 0.0;
  std::vector<std::vector<Mat>> b;  // [t][h], S x K
  bool ill_conditioned = false;     // any covariance condition number > 1e12
};

struct AlphaInfo {
  double alpha = 0.0;
  double zeta_n = 0.0;
};

// Penalty scale from the high-probability analysis: alpha =
// sqrt(2 n omega zeta_n + lambda d) with zeta_n =
// 2 log(2 |Phi| |Psi|^T n H / delta) / n. Computed in log space; throws if
// the result is not finite.
AlphaInfo alpha_from_theory(int n, double omega, double lambda, int d,
                            int size_phi, int size_psi, int T, int H,
                            double delta);

// Ridge scale lambda = c * log(|Phi| |Psi|^T n H / delta), default c = 1.
double lambda_from_theory(double c, int size_phi, int size_psi, int T, int n,
                          int H, double delta);

struct AlphaTheory {
  double omega = 1.0;
  double delta = 0.1;
};
struct AlphaManual {
  double alpha = 0.0;
};
using AlphaMode = std::variant<AlphaTheory, AlphaManual>;

// Eq.-style empirical covariance over task t's step-h data.
Mat empirical_covariance(const Mat& phi_hat_h, const OfflineDataset& data,
                         int t, int h, double lambda);

CovarianceState covariance_state(const FeatureTable& phi_hat,
                                 const OfflineDataset& data, double lambda);

// Penalties for every (t,h,s,a) via SPD solves against the covariances.
// num_actions splits the feature rows (laid out s*K+a) into S x K tables.
PenaltyTable penalty_table(const FeatureTable& phi_hat,
                           const CovarianceState& cov, double alpha,
                           int num_actions);

// Full offline multitask pipeline: per-step MLE model selection, per-task
// covariances and penalties, then per-task pessimistic planning under the
// learned kernel with penalty-shifted rewards.
struct MorlOutput {
  LearnedModel learned;
  CovarianceState covariances;
  PenaltyTable penalties;
  std::vector<DeterministicPolicy> policies;
  AlphaInfo alpha_info;
  double lambda = 0.0;
};

MorlOutput run_morl(const OfflineDataset& data, const ModelClass& model_class,
                    const std::vector<RewardTable>& rewards, double lambda,
                    const AlphaMode& alpha_mode);

// Average (over tasks) exact expected TV error of the learned kernels at
// step h, under the true behavior occupancies.
double avg_tv_error(const LearnedModel& learned, const TaskFamily& family,
                    const std::vector<StochasticPolicy>& behavior, int h);

// Average (over tasks) exact value gap between comparator policies and the
// given policies on the true tasks.
double avg_suboptimality(const std::vector<DeterministicPolicy>& policies,
                         const std::vector<DeterministicPolicy>& comparators,
                         const TaskFamily& family,
                         const std::vector<RewardTable>& rewards);

// Largest generalized eigenvalue of (A, B) for symmetric PSD inputs; the
// worst-direction ratio x'Ax / x'Bx. When B is singular the problem is
// restricted to range(B) (eigenvalue threshold 1e-10 relative); if A has
// mass outside that range the ratio is unbounded and +infinity is returned.
double relative_condition_number(const Mat& a, const Mat& b);

// The same ratio with A and B the exact feature second moments of task t at
// step h under the comparator policy and the behavior policy.
double relative_condition_number(const TaskFamily& family, int t,
                                 const DeterministicPolicy& policy,
                                 const StochasticPolicy& behavior, int h);

// Average (over tasks) gap between the pessimistic value of the comparator
// under the learned model with penalized rewards and its true value:
// negative when pessimism holds.
double pessimism_gap(const LearnedModel& learned, const PenaltyTable& penalties,
                     const std::vector<DeterministicPolicy>& comparators,
                     const TaskFamily& family,
                     const std::vector<RewardTable>& rewards);

// Every quantity of the upstream analysis measured on one run, with the
// matching theoretical bounds evaluated at the run's parameters.
struct UpstreamReport {
  std::vector<double> avg_tv;  // per h
  double tv_bound = 0.0;       // sqrt(zeta_n / T)
  double avg_subopt = 0.0;
  double subopt_bound = 0.0;  // H^2 d^{3/2} omega sqrt(C* log(..)/n)
  double pessimism_gap = 0.0;
  double pessimism_bound = 0.0;  // H sqrt(omega zeta_n / T)
  double c_star = 0.0;
  double omega = 1.0;
  double kappa = 0.0;
  double alpha = 0.0;
  double zeta_n = 0.0;
  double lambda = 0.0;
  bool realizable = false;
  bool ill_conditioned = false;
};

// Assembles the report for a finished run against the generating family.
// Comparators default to the true per-task optimal policies.
UpstreamReport build_upstream_report(
    const MorlOutput& out, const OfflineDataset& data,
    const TaskFamily& family, const std::vector<StochasticPolicy>& behavior,
    const std::vector<CoverageCertificate>& certs,
    const std::vector<RewardTable>& rewards, const ModelClass& model_class,
    double delta,
    const std::optional<std::vector<DeterministicPolicy>>& comparators =
        std::nullopt);

}  // namespace morl
