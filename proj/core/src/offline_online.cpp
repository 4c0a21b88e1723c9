#include "morl/offline_online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace morl {

double beta_pevi(int horizon, int rank, int n_off, double delta,
                 double xi_down, double c_beta) {
  if (horizon < 1 || rank < 1 || n_off < 0 || delta <= 0.0 || delta >= 1.0 ||
      xi_down < 0.0 || c_beta < 0.0) {
    throw std::invalid_argument("invalid penalty-scale parameters");
  }
  const double H = horizon;
  const double d = rank;
  const double iota = std::log(H * d * std::max(n_off, 1) *
                               std::max(xi_down, 1.0) / delta);
  return c_beta * (H * d * std::sqrt(iota) +
                   H * std::sqrt(d * static_cast<double>(n_off)) * xi_down);
}

PeviResult pevi(const OfflineDataset& data, const FeatureTable& phi_hat,
                const PeviConfig& config) {
  if (data.num_tasks < 1) throw std::invalid_argument("empty dataset");
  if (config.lambda_d <= 0.0 || config.beta < 0.0 || config.xi_down < 0.0) {
    throw std::invalid_argument("invalid pessimistic config");
  }
  const int S = data.num_states;
  const int K = data.num_actions;
  const int H = data.horizon;
  if (static_cast<int>(phi_hat.size()) != H ||
      phi_hat[0].rows() != S * K) {
    throw std::invalid_argument("feature table shape mismatch");
  }
  const int d = static_cast<int>(phi_hat[0].cols());

  std::vector<RidgeState> ridge(H, RidgeState(d, config.lambda_d));
  std::vector<Mat> feature_sums(H, Mat::Zero(d, S));
  std::vector<Vec> reward_moments(H, Vec::Zero(d));
  PeviResult out;
  out.kappa_rho = 0.0;
  double kappa_rho = std::numeric_limits<double>::infinity();
  const int n_off = static_cast<int>(data.tuples[0].empty()
                                         ? 0
                                         : data.tuples[0][0].size());
  for (int h = 0; h < H; ++h) {
    for (const Transition& tr : data.tuples[0][h]) {
      const Vec phi = phi_hat[h].row(tr.state * K + tr.action).transpose();
      ridge[h].add(phi);
      feature_sums[h].col(tr.next_state) += phi;
      reward_moments[h] += tr.reward * phi;
    }
    if (n_off > 0) {
      const Mat mean_moment =
          (ridge[h].lambda_matrix() -
           config.lambda_d * Mat::Identity(d, d)) /
          static_cast<double>(n_off);
      Eigen::SelfAdjointEigenSolver<Mat> es(mean_moment);
      kappa_rho = std::min(kappa_rho, es.eigenvalues().minCoeff());
    }
  }
  out.kappa_rho = n_off > 0 ? std::max(kappa_rho, 0.0) : 0.0;
  if (out.kappa_rho > 0.0 && n_off > 0) {
    const double Hd = static_cast<double>(H);
    const double dd = static_cast<double>(d);
    const double iota = std::log(Hd * dd * std::max(n_off, 1) *
                                 std::max(config.xi_down, 1.0) / config.delta);
    out.refined_bound =
        (Hd * Hd * dd * std::sqrt(iota / static_cast<double>(n_off)) +
         Hd * Hd * std::sqrt(dd) * config.xi_down) /
        std::sqrt(out.kappa_rho);
  }

  out.policy.action.assign(H, std::vector<int>(S, 0));
  out.values.v.assign(H + 1, Vec::Zero(S));
  out.values.q.assign(H, Mat::Zero(S, K));
  out.gamma.assign(H, Mat::Zero(S, K));
  for (int h = H - 1; h >= 0; --h) {
    // Zero-based step: the value of the remaining subproblem is at most
    // H - h, the number of rewards still collectable.
    const double cap = static_cast<double>(H - h);
    const Vec weights = ridge[h].solve(reward_moments[h] +
                                       feature_sums[h] * out.values.v[h + 1]);
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      for (int a = 0; a < K; ++a) {
        const Vec phi = phi_hat[h].row(s * K + a).transpose();
        const double gamma = static_cast<double>(H) * config.xi_down +
                             config.beta * ridge[h].bonus(phi);
        out.gamma[h](s, a) = gamma;
        const double q = std::clamp(phi.dot(weights) - gamma, 0.0, cap);
        out.values.q[h](s, a) = q;
        if (q > best) {
          best = q;
          out.policy.action[h][s] = a;
        }
      }
      out.values.v[h](s) = best;
    }
  }
  return out;
}

double beta_lsvi(int horizon, int rank, int episode, double delta,
                 double xi_down, double c_l, double c_beta) {
  if (horizon < 1 || rank < 1 || episode < 1 || delta <= 0.0 ||
      delta >= 1.0 || xi_down < 0.0 || c_l <= 0.0 || c_beta < 0.0) {
    throw std::invalid_argument("invalid bonus-scale parameters");
  }
  const double H = horizon;
  const double d = rank;
  const double n = episode;
  const double iota = std::log(H * d * n * std::max(xi_down, 1.0) / delta);
  return c_beta * (H * d * std::sqrt(iota) +
                   H * std::sqrt(d * n) * xi_down + c_l * std::sqrt(H * d));
}

LsviResult lsvi_ucb(const TabularLowRankMdp& env, const FeatureTable& phi_hat,
                    const RewardTable& reward, const LsviConfig& config,
                    Rng& rng) {
  if (config.episodes < 1 || config.lambda_d <= 0.0) {
    throw std::invalid_argument("invalid online config");
  }
  const int S = env.num_states;
  const int K = env.num_actions;
  const int H = env.horizon;
  if (static_cast<int>(phi_hat.size()) != H ||
      phi_hat[0].rows() != S * K ||
      static_cast<int>(reward.size()) != H) {
    throw std::invalid_argument("feature or reward shape mismatch");
  }
  const int d = static_cast<int>(phi_hat[0].cols());
  const Vec init = env.initial_distribution();
  const TransitionModel truth = env.kernels();

  std::vector<RidgeState> ridge(H, RidgeState(d, config.lambda_d));
  std::vector<Mat> feature_sums(H, Mat::Zero(d, S));
  std::vector<Vec> reward_moments(H, Vec::Zero(d));

  LsviResult out;
  out.policies.reserve(config.episodes);
  out.episode_values.reserve(config.episodes);
  out.qhat_trace.reserve(config.episodes);
  out.optimal_value =
      initial_value(optimal_plan(truth, reward).values, init);

  for (int n = 1; n <= config.episodes; ++n) {
    const double beta_n = beta_lsvi(H, d, n, config.delta, config.xi_down,
                                    config.c_l, config.c_beta);
    DeterministicPolicy policy;
    policy.action.assign(H, std::vector<int>(S, 0));
    std::vector<Mat> qhat(H);
    Vec v_next = Vec::Zero(S);
    for (int h = H - 1; h >= 0; --h) {
      const double cap = static_cast<double>(H - h);
      const Vec weights = ridge[h].solve(reward_moments[h] +
                                         feature_sums[h] * v_next);
      qhat[h] = Mat(S, K);
      Vec v_h(S);
      for (int s = 0; s < S; ++s) {
        double best = -1.0;
        for (int a = 0; a < K; ++a) {
          const Vec phi = phi_hat[h].row(s * K + a).transpose();
          const double q = std::clamp(
              phi.dot(weights) + beta_n * ridge[h].bonus(phi), 0.0, cap);
          qhat[h](s, a) = q;
          if (q > best) {
            best = q;
            policy.action[h][s] = a;
          }
        }
        v_h(s) = best;
      }
      v_next = v_h;
    }

    out.episode_values.push_back(
        initial_value(evaluate_policy(truth, reward, policy), init));
    const Trajectory episode = sample_episode(env, policy, rng);
    for (const Step& step : episode) {
      const Vec phi =
          phi_hat[step.h].row(step.state * K + step.action).transpose();
      ridge[step.h].add(phi);
      feature_sums[step.h].col(step.next_state) += phi;
      reward_moments[step.h] += reward[step.h](step.state, step.action) * phi;
    }
    out.policies.push_back(std::move(policy));
    out.qhat_trace.push_back(std::move(qhat));
  }

  double total = 0.0;
  for (double v : out.episode_values) total += v;
  out.mixture_value = total / static_cast<double>(config.episodes);
  return out;
}

long optimism_violations(const LsviResult& run, const TabularLowRankMdp& env,
                         const RewardTable& reward, double xi_down,
                         double tolerance) {
  const ValueTable optimal = optimal_plan(env.kernels(), reward).values;
  const int H = env.horizon;
  long violations = 0;
  for (const std::vector<Mat>& qhat : run.qhat_trace) {
    for (int h = 0; h < H; ++h) {
      const double slack =
          2.0 * static_cast<double>(H) * static_cast<double>(H - h) * xi_down +
          tolerance;
      for (int s = 0; s < env.num_states; ++s) {
        for (int a = 0; a < env.num_actions; ++a) {
          if (qhat[h](s, a) < optimal.q[h](s, a) - slack) ++violations;
        }
      }
    }
  }
  return violations;
}

}  // namespace morl
