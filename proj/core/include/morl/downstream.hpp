#pragma once

#include <vector>

#include "morl/mdp.hpp"

namespace morl {

// Accumulated ridge design matrix lambda_d I + sum phi phi'. Incremental
// adds match a batch recomputation to rounding.
class RidgeState {
 public:
  RidgeState(int dim, double lambda_d);

  void add(const Eigen::Ref<const Vec>& phi);

  // sqrt(phi' Lambda^{-1} phi), computed by SPD solve.
  double bonus(const Eigen::Ref<const Vec>& phi) const;

  Vec solve(const Eigen::Ref<const Vec>& rhs) const;

  const Mat& lambda_matrix() const { return lambda_; }
  int count() const { return count_; }
  double lambda_d() const { return lambda_d_; }

 private:
  double lambda_d_ = 1.0;
  int count_ = 0;
  Mat lambda_;
};

// w = (lambda_d I + sum phi phi')^{-1} sum phi y.
Vec ridge_weights(const std::vector<Vec>& phis,
                  const std::vector<double>& targets, double lambda_d);

struct XiDownParams {
  double xi = 0.0;
  double c_l = 1.0;
  double c_r = 1.0;
  double nu = 1.0;     // 1/S for a finite state space
  double kappa = 0.0;  // min behavior state occupancy
  int num_tasks = 1;
  int n = 1;  // upstream episodes per task
  int size_phi = 1;
  int size_psi = 1;
  int horizon = 1;
  double delta = 0.1;
};

// Downstream feature-quality budget: the target misspecification xi plus
// the transfer of the upstream estimation error,
// (C_L C_R nu / kappa) sqrt(2 T log(2|Phi||Psi|^T n H / delta) / n).
// Throws when kappa <= 0, since the transfer bound needs every state
// reachable under the behavior policies.
struct XiDown {
  double value = 0.0;
  double transfer_term = 0.0;
  XiDownParams params;
};
XiDown xi_down(const XiDownParams& params);

// Measured feature quality: per step, fit factors to the target kernel by
// least squares over all (s,a) rows and report the worst rowwise TV
// residual. This upper-bounds the best achievable error over signed factor
// choices (exact minimization would be a linear program per step; least
// squares is enough for its monitoring role here).
struct FeatureErrorResult {
  std::vector<double> per_h;
  double max_error = 0.0;
  bool regularized = false;  // feature matrix was rank-deficient
};
FeatureErrorResult approx_feature_error(const FeatureTable& phi_hat,
                                        const TabularLowRankMdp& target);

// Telescoping bonus bound: lhs = sum_n Tr(X_n M_{n-1}^{-1}) with
// M_n = M_{n-1} + X_n starting from lambda I, rhs = 2 d log(1 + N/(lambda d)).
// For PSD X_n with trace at most 1, lhs <= rhs always.
struct EllipticalPotential {
  double lhs = 0.0;
  double rhs = 0.0;
};
EllipticalPotential elliptical_potential_check(const std::vector<Mat>& stream,
                                               double lambda);

}  // namespace morl
