#include "morl/upstream.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace morl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(2 |Phi| |Psi|^T n H / delta), assembled in log space so huge class
// sizes cannot overflow.
double log_deviation_term(int size_phi, int size_psi, int T, int n, int H,
                          double delta, bool with_factor_two) {
  if (size_phi < 1 || size_psi < 1 || T < 1 || n < 1 || H < 1 ||
      delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("invalid deviation-bound parameters");
  }
  double value = std::log(static_cast<double>(size_phi)) +
                 static_cast<double>(T) * std::log(static_cast<double>(size_psi)) +
                 std::log(static_cast<double>(n)) +
                 std::log(static_cast<double>(H)) - std::log(delta);
  if (with_factor_two) value += std::log(2.0);
  return value;
}

bool tables_equal(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
    if ((a[i] - b[i]).cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

Mat second_moment(const Mat& phi_h, const Mat& occupancy) {
  const int d = static_cast<int>(phi_h.cols());
  const int K = static_cast<int>(occupancy.cols());
  Mat m = Mat::Zero(d, d);
  for (int s = 0; s < occupancy.rows(); ++s) {
    for (int a = 0; a < K; ++a) {
      const double w = occupancy(s, a);
      if (w > 0.0) {
        const Vec phi = phi_h.row(s * K + a).transpose();
        m += w * phi * phi.transpose();
      }
    }
  }
  return m;
}

}  // namespace

AlphaInfo alpha_from_theory(int n, double omega, double lambda, int d,
                            int size_phi, int size_psi, int T, int H,
                            double delta) {
  if (omega < 1.0 || lambda < 0.0 || d < 1) {
    throw std::invalid_argument("invalid alpha parameters");
  }
  const double log_term =
      log_deviation_term(size_phi, size_psi, T, n, H, delta, true);
  AlphaInfo info;
  info.zeta_n = 2.0 * log_term / static_cast<double>(n);
  // 2 n omega zeta_n collapses to 4 omega log_term, so n never enters a
  // product that could overflow.
  info.alpha = std::sqrt(4.0 * omega * log_term +
                         lambda * static_cast<double>(d));
  if (!std::isfinite(info.alpha) || !std::isfinite(info.zeta_n)) {
    throw std::domain_error("alpha overflow");
  }
  return info;
}

double lambda_from_theory(double c, int size_phi, int size_psi, int T, int n,
                          int H, double delta) {
  if (c <= 0.0) throw std::invalid_argument("lambda constant must be positive");
  return c * log_deviation_term(size_phi, size_psi, T, n, H, delta, false);
}

Mat empirical_covariance(const Mat& phi_hat_h, const OfflineDataset& data,
                         int t, int h, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  const int d = static_cast<int>(phi_hat_h.cols());
  const Vec visit_weights = data.counts(t, h).rowwise().sum();
  Mat sigma = lambda * Mat::Identity(d, d);
  sigma += phi_hat_h.transpose() * visit_weights.asDiagonal() * phi_hat_h;
  return 0.5 * (sigma + sigma.transpose());
}

CovarianceState covariance_state(const FeatureTable& phi_hat,
                                 const OfflineDataset& data, double lambda) {
  CovarianceState state;
  state.lambda = lambda;
  state.sigma.assign(data.num_tasks, std::vector<Mat>(data.horizon));
  for (int t = 0; t < data.num_tasks; ++t) {
    for (int h = 0; h < data.horizon; ++h) {
      state.sigma[t][h] = empirical_covariance(phi_hat[h], data, t, h, lambda);
    }
  }
  return state;
}

PenaltyTable penalty_table(const FeatureTable& phi_hat,
                           const CovarianceState& cov, double alpha,
                           int num_actions) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw std::invalid_argument("alpha must be finite and nonnegative");
  }
  PenaltyTable table;
  table.alpha = alpha;
  const int T = static_cast<int>(cov.sigma.size());
  const int H = T > 0 ? static_cast<int>(cov.sigma[0].size()) : 0;
  table.b.assign(T, std::vector<Mat>(H));
  for (int t = 0; t < T; ++t) {
    for (int h = 0; h < H; ++h) {
      const Mat& sigma = cov.at(t, h);
      Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
      const double emin = es.eigenvalues().minCoeff();
      const double emax = es.eigenvalues().maxCoeff();
      if (emin <= 0.0 || emax / emin > 1e12) table.ill_conditioned = true;

      const Mat& phi_h = phi_hat[h];
      if (num_actions < 1 || phi_h.rows() % num_actions != 0) {
        throw std::invalid_argument(
            "feature rows not divisible by action count");
      }
      const int num_states = static_cast<int>(phi_h.rows()) / num_actions;
      // One SPD solve against all feature rows at once.
      const Mat solved = Eigen::LDLT<Mat>(sigma).solve(phi_h.transpose());
      table.b[t][h] = Mat(num_states, num_actions);
      for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
          const int row = s * num_actions + a;
          const double quad =
              std::max(phi_h.row(row).dot(solved.col(row)), 0.0);
          table.b[t][h](s, a) = std::min(alpha * std::sqrt(quad), 1.0);
        }
      }
    }
  }
  return table;
}

MorlOutput run_morl(const OfflineDataset& data, const ModelClass& model_class,
                    const std::vector<RewardTable>& rewards, double lambda,
                    const AlphaMode& alpha_mode) {
  if (static_cast<int>(rewards.size()) != data.num_tasks) {
    throw std::invalid_argument("one reward table per task required");
  }
  MorlOutput out;
  out.lambda = lambda;
  out.learned = fit_model(model_class, data);
  out.covariances = covariance_state(out.learned.phi_hat, data, lambda);
  if (std::holds_alternative<AlphaTheory>(alpha_mode)) {
    const AlphaTheory& mode = std::get<AlphaTheory>(alpha_mode);
    out.alpha_info = alpha_from_theory(
        std::max(data.episodes, 1), mode.omega, lambda, model_class.rank,
        model_class.size_phi(), model_class.size_psi(), data.num_tasks,
        data.horizon, mode.delta);
  } else {
    out.alpha_info.alpha = std::get<AlphaManual>(alpha_mode).alpha;
    out.alpha_info.zeta_n = 0.0;
  }
  out.penalties = penalty_table(out.learned.phi_hat, out.covariances,
                                out.alpha_info.alpha, data.num_actions);
  out.policies.reserve(data.num_tasks);
  for (int t = 0; t < data.num_tasks; ++t) {
    RewardTable penalized(data.horizon);
    for (int h = 0; h < data.horizon; ++h) {
      penalized[h] = rewards[t][h] - out.penalties.b[t][h];
    }
    out.policies.push_back(
        optimal_plan(out.learned.p_hat[t], penalized).policy);
  }
  return out;
}

double avg_tv_error(const LearnedModel& learned, const TaskFamily& family,
                    const std::vector<StochasticPolicy>& behavior, int h) {
  const int T = family.num_tasks();
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const TransitionModel truth = family.tasks[t].kernels();
    const std::vector<Mat> occ = occupancy_measures(
        truth, behavior[t], family.tasks[t].initial_distribution());
    double expected_tv = 0.0;
    for (int s = 0; s < family.num_states; ++s) {
      for (int a = 0; a < family.num_actions; ++a) {
        const double w = occ[h](s, a);
        if (w > 0.0) {
          const int row = family.tasks[t].sa(s, a);
          expected_tv +=
              w * tv_distance(learned.p_hat[t].p[h].row(row).transpose(),
                              truth.p[h].row(row).transpose());
        }
      }
    }
    total += expected_tv;
  }
  return total / static_cast<double>(T);
}

double avg_suboptimality(const std::vector<DeterministicPolicy>& policies,
                         const std::vector<DeterministicPolicy>& comparators,
                         const TaskFamily& family,
                         const std::vector<RewardTable>& rewards) {
  const int T = family.num_tasks();
  if (static_cast<int>(policies.size()) != T ||
      static_cast<int>(comparators.size()) != T) {
    throw std::invalid_argument("one policy and comparator per task required");
  }
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const TransitionModel truth = family.tasks[t].kernels();
    const Vec init = family.tasks[t].initial_distribution();
    const double v_comp =
        initial_value(evaluate_policy(truth, rewards[t], comparators[t]), init);
    const double v_hat =
        initial_value(evaluate_policy(truth, rewards[t], policies[t]), init);
    total += v_comp - v_hat;
  }
  return total / static_cast<double>(T);
}

double relative_condition_number(const Mat& a, const Mat& b) {
  const Mat as = 0.5 * (a + a.transpose());
  const Mat bs = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(bs);
  const Vec evals = es.eigenvalues();
  const Mat evecs = es.eigenvectors();
  const double bmax = evals.maxCoeff();
  const double threshold = 1e-10 * std::max(bmax, 0.0);
  const double a_scale = std::max(as.cwiseAbs().maxCoeff(), 0.0);

  std::vector<int> keep;
  for (int i = 0; i < evals.size(); ++i) {
    if (evals(i) > threshold && evals(i) > 0.0) keep.push_back(i);
  }
  if (keep.empty()) return a_scale > 1e-12 ? kInf : 0.0;

  if (static_cast<int>(keep.size()) < evals.size()) {
    // Mass of A on the numerical null space of B makes the ratio unbounded.
    Mat null_basis(evals.size(), evals.size() - keep.size());
    int out_col = 0;
    for (int i = 0; i < evals.size(); ++i) {
      if (evals(i) <= threshold || evals(i) <= 0.0) {
        null_basis.col(out_col++) = evecs.col(i);
      }
    }
    const double outside =
        (null_basis.transpose() * as * null_basis).cwiseAbs().maxCoeff();
    if (outside > 1e-10 * std::max(a_scale, 1e-30)) return kInf;
  }

  Mat range_basis(evals.size(), keep.size());
  Vec range_evals(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    range_basis.col(static_cast<int>(i)) = evecs.col(keep[i]);
    range_evals(static_cast<int>(i)) = evals(keep[i]);
  }
  const Vec inv_sqrt = range_evals.cwiseSqrt().cwiseInverse();
  const Mat reduced = inv_sqrt.asDiagonal() *
                      (range_basis.transpose() * as * range_basis) *
                      inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> er(0.5 * (reduced + reduced.transpose()));
  return std::max(er.eigenvalues().maxCoeff(), 0.0);
}

double relative_condition_number(const TaskFamily& family, int t,
                                 const DeterministicPolicy& policy,
                                 const StochasticPolicy& behavior, int h) {
  const TransitionModel truth = family.tasks[t].kernels();
  const Vec init = family.tasks[t].initial_distribution();
  const Mat occ_policy = occupancy_measures(truth, policy, init)[h];
  const Mat occ_behavior = occupancy_measures(truth, behavior, init)[h];
  const Mat& phi_h = family.shared_phi()[h];
  return relative_condition_number(second_moment(phi_h, occ_policy),
                                   second_moment(phi_h, occ_behavior));
}

double pessimism_gap(const LearnedModel& learned, const PenaltyTable& penalties,
                     const std::vector<DeterministicPolicy>& comparators,
                     const TaskFamily& family,
                     const std::vector<RewardTable>& rewards) {
  const int T = family.num_tasks();
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    RewardTable penalized(family.horizon);
    for (int h = 0; h < family.horizon; ++h) {
      penalized[h] = rewards[t][h] - penalties.b[t][h];
    }
    const Vec init = family.tasks[t].initial_distribution();
    const double v_pess = initial_value(
        evaluate_policy(learned.p_hat[t], penalized, comparators[t]), init);
    const double v_true = initial_value(
        evaluate_policy(family.tasks[t].kernels(), rewards[t], comparators[t]),
        init);
    total += v_pess - v_true;
  }
  return total / static_cast<double>(T);
}

UpstreamReport build_upstream_report(
    const MorlOutput& out, const OfflineDataset& data,
    const TaskFamily& family, const std::vector<StochasticPolicy>& behavior,
    const std::vector<CoverageCertificate>& certs,
    const std::vector<RewardTable>& rewards, const ModelClass& model_class,
    double delta,
    const std::optional<std::vector<DeterministicPolicy>>& comparators) {
  const int T = family.num_tasks();
  const int H = family.horizon;
  const int n = std::max(data.episodes, 1);

  std::vector<DeterministicPolicy> comp;
  if (comparators.has_value()) {
    comp = *comparators;
  } else {
    comp.reserve(T);
    for (int t = 0; t < T; ++t) {
      comp.push_back(
          optimal_plan(family.tasks[t].kernels(), rewards[t]).policy);
    }
  }

  UpstreamReport report;
  report.avg_tv.resize(H);
  for (int h = 0; h < H; ++h) {
    report.avg_tv[h] = avg_tv_error(out.learned, family, behavior, h);
  }
  const CoverageCertificate agg = aggregate_coverage(certs);
  report.omega = agg.omega;
  report.kappa = agg.kappa;
  report.lambda = out.lambda;
  report.alpha = out.alpha_info.alpha;
  report.ill_conditioned = out.penalties.ill_conditioned;

  report.zeta_n =
      2.0 *
      log_deviation_term(model_class.size_phi(), model_class.size_psi(), T, n,
                         H, delta, true) /
      static_cast<double>(n);
  report.tv_bound = std::sqrt(report.zeta_n / static_cast<double>(T));

  report.c_star = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int h = 0; h < H; ++h) {
      report.c_star = std::max(
          report.c_star,
          relative_condition_number(family, t, comp[t], behavior[t], h));
    }
  }

  report.avg_subopt = avg_suboptimality(out.policies, comp, family, rewards);
  const double log_term =
      log_deviation_term(model_class.size_phi(), model_class.size_psi(), T, n,
                         H, delta, false);
  const double d = static_cast<double>(family.rank);
  report.subopt_bound = static_cast<double>(H) * H * d * std::sqrt(d) *
                        report.omega *
                        std::sqrt(report.c_star * log_term /
                                  static_cast<double>(n));

  report.pessimism_gap =
      pessimism_gap(out.learned, out.penalties, comp, family, rewards);
  report.pessimism_bound =
      static_cast<double>(H) *
      std::sqrt(report.omega * report.zeta_n / static_cast<double>(T));

  report.realizable = false;
  for (const FeatureTable& cand : model_class.phis) {
    if (tables_equal(cand, family.shared_phi())) {
      report.realizable = true;
      break;
    }
  }
  if (report.realizable) {
    for (int t = 0; t < T && report.realizable; ++t) {
      bool found = false;
      for (const FactorTable& cand : model_class.psis) {
        if (tables_equal(cand, family.tasks[t].mu)) {
          found = true;
          break;
        }
      }
      report.realizable = found;
    }
  }
  return report;
}

}  // namespace morl
