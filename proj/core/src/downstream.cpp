#include "morl/downstream.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace morl {

RidgeState::RidgeState(int dim, double lambda_d)
    : lambda_d_(lambda_d), count_(0) {
  if (dim < 1 || lambda_d <= 0.0) {
    throw std::invalid_argument("ridge state needs dim >= 1 and lambda > 0");
  }
  lambda_ = lambda_d * Mat::Identity(dim, dim);
}

void RidgeState::add(const Eigen::Ref<const Vec>& phi) {
  if (phi.size() != lambda_.rows()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  lambda_ += phi * phi.transpose();
  ++count_;
}

double RidgeState::bonus(const Eigen::Ref<const Vec>& phi) const {
  const Vec solved = solve(phi);
  return std::sqrt(std::max(phi.dot(solved), 0.0));
}

Vec RidgeState::solve(const Eigen::Ref<const Vec>& rhs) const {
  if (rhs.size() != lambda_.rows()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  return Eigen::LDLT<Mat>(lambda_).solve(rhs);
}

Vec ridge_weights(const std::vector<Vec>& phis,
                  const std::vector<double>& targets, double lambda_d) {
  if (phis.size() != targets.size()) {
    throw std::invalid_argument("one target per feature vector required");
  }
  if (phis.empty()) throw std::invalid_argument("empty regression");
  const int d = static_cast<int>(phis[0].size());
  Mat design = lambda_d * Mat::Identity(d, d);
  Vec moment = Vec::Zero(d);
  for (std::size_t i = 0; i < phis.size(); ++i) {
    design += phis[i] * phis[i].transpose();
    moment += targets[i] * phis[i];
  }
  return Eigen::LDLT<Mat>(design).solve(moment);
}

XiDown xi_down(const XiDownParams& params) {
  if (params.kappa <= 0.0) {
    throw std::domain_error(
        "transfer bound undefined: some state has zero behavior occupancy");
  }
  if (params.xi < 0.0 || params.c_l <= 0.0 || params.c_r <= 0.0 ||
      params.nu <= 0.0 || params.num_tasks < 1 || params.n < 1 ||
      params.size_phi < 1 || params.size_psi < 1 || params.horizon < 1 ||
      params.delta <= 0.0 || params.delta >= 1.0) {
    throw std::invalid_argument("invalid feature-budget parameters");
  }
  const double log_term =
      std::log(2.0) + std::log(static_cast<double>(params.size_phi)) +
      static_cast<double>(params.num_tasks) *
          std::log(static_cast<double>(params.size_psi)) +
      std::log(static_cast<double>(params.n)) +
      std::log(static_cast<double>(params.horizon)) - std::log(params.delta);
  XiDown result;
  result.params = params;
  result.transfer_term =
      (params.c_l * params.c_r * params.nu / params.kappa) *
      std::sqrt(2.0 * static_cast<double>(params.num_tasks) * log_term /
                static_cast<double>(params.n));
  result.value = params.xi + result.transfer_term;
  return result;
}

FeatureErrorResult approx_feature_error(const FeatureTable& phi_hat,
                                        const TabularLowRankMdp& target) {
  if (static_cast<int>(phi_hat.size()) != target.horizon) {
    throw std::invalid_argument("feature table horizon mismatch");
  }
  const TransitionModel truth = target.kernels();
  FeatureErrorResult result;
  result.per_h.resize(target.horizon);
  for (int h = 0; h < target.horizon; ++h) {
    const Mat& phi_h = phi_hat[h];
    Eigen::ColPivHouseholderQR<Mat> qr(phi_h);
    Mat factors;
    if (qr.rank() < phi_h.cols()) {
      result.regularized = true;
      const Mat gram = phi_h.transpose() * phi_h +
                       1e-10 * Mat::Identity(phi_h.cols(), phi_h.cols());
      factors = Eigen::LDLT<Mat>(gram).solve(phi_h.transpose() * truth.p[h]);
    } else {
      factors = qr.solve(truth.p[h]);
    }
    const Mat residual = phi_h * factors - truth.p[h];
    double worst = 0.0;
    for (int row = 0; row < residual.rows(); ++row) {
      worst = std::max(worst, 0.5 * residual.row(row).lpNorm<1>());
    }
    result.per_h[h] = worst;
    result.max_error = std::max(result.max_error, worst);
  }
  return result;
}

EllipticalPotential elliptical_potential_check(const std::vector<Mat>& stream,
                                               double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  EllipticalPotential result;
  if (stream.empty()) return result;
  const int d = static_cast<int>(stream[0].rows());
  Mat m = lambda * Mat::Identity(d, d);
  for (const Mat& x : stream) {
    if (x.rows() != d || x.cols() != d) {
      throw std::invalid_argument("inconsistent matrix dimensions");
    }
    result.lhs += Eigen::LDLT<Mat>(m).solve(x).trace();
    m += x;
  }
  result.rhs = 2.0 * d *
               std::log(1.0 + static_cast<double>(stream.size()) /
                                  (lambda * static_cast<double>(d)));
  return result;
}

}  // namespace morl
