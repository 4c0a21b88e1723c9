#include "morl/rfe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace morl {
namespace {

void check_feature_dims(const TabularLowRankMdp& env,
                        const FeatureTable& phi_hat) {
  if (static_cast<int>(phi_hat.size()) != env.horizon) {
    throw std::invalid_argument("feature table horizon mismatch");
  }
  for (const Mat& m : phi_hat) {
    if (m.rows() != env.num_states * env.num_actions) {
      throw std::invalid_argument("feature table row count mismatch");
    }
  }
}

}  // namespace

double beta_rfe(int horizon, int rank, int episodes, double delta, double c_l,
                double xi_down) {
  if (horizon < 1 || rank < 1 || episodes < 1 || delta <= 0.0 ||
      delta >= 1.0 || c_l <= 0.0 || xi_down < 0.0) {
    throw std::invalid_argument("invalid bonus-scale parameters");
  }
  const double H = horizon;
  const double d = rank;
  const double K = episodes;
  const double log_term =
      std::log(d * K * H * std::max(xi_down, 1.0) / delta);
  return c_l * H * std::sqrt(d) + d * H * std::sqrt(log_term) +
         H * xi_down * std::sqrt(d * K);
}

RfeExploreResult rfe_explore(const TabularLowRankMdp& env,
                             const FeatureTable& phi_hat,
                             const RfeConfig& config, Rng& rng) {
  check_feature_dims(env, phi_hat);
  if (config.episodes < 1 || config.beta < 0.0) {
    throw std::invalid_argument("invalid exploration config");
  }
  const int S = env.num_states;
  const int K = env.num_actions;
  const int H = env.horizon;
  const int d = static_cast<int>(phi_hat[0].cols());
  const double cap = static_cast<double>(H);
  const Vec init = env.initial_distribution();
  const TransitionModel truth = env.kernels();

  RfeExploreResult out;
  out.data.episodes = config.episodes;
  out.data.horizon = H;
  out.data.num_states = S;
  out.data.num_actions = K;
  out.data.tuples.assign(config.episodes, std::vector<RfeTransition>(H));
  std::vector<RidgeState> ridge(H, RidgeState(d, 1.0));
  // Column s' accumulates the features of transitions that landed in s', so
  // the regression moment at any value vector v is feature_sums[h] * v.
  std::vector<Mat> feature_sums(H, Mat::Zero(d, S));

  out.trace.vhat_initial.resize(config.episodes);
  out.trace.bonus_visited.assign(config.episodes, std::vector<double>(H, 0.0));
  if (config.track_optimism) {
    out.trace.trunc_opt_initial.resize(config.episodes);
  }

  for (int k = 0; k < config.episodes; ++k) {
    std::vector<Mat> bonus_reward(H);
    DeterministicPolicy policy;
    policy.action.assign(H, std::vector<int>(S, 0));
    Vec v_next = Vec::Zero(S);
    for (int h = H - 1; h >= 0; --h) {
      const Vec weights = ridge[h].solve(feature_sums[h] * v_next);
      bonus_reward[h] = Mat(S, K);
      Vec v_h(S);
      for (int s = 0; s < S; ++s) {
        double best = -1.0;
        for (int a = 0; a < K; ++a) {
          const Vec phi = phi_hat[h].row(s * K + a).transpose();
          const double u = config.beta * ridge[h].bonus(phi);
          bonus_reward[h](s, a) = u;
          // The reward of this episode is the bonus itself, so the backup
          // adds it twice: once as reward, once as exploration bonus.
          const double q =
              std::clamp(phi.dot(weights) + 2.0 * u, 0.0, cap);
          if (q > best) {
            best = q;
            policy.action[h][s] = a;
          }
        }
        v_h(s) = best;
      }
      v_next = v_h;
    }
    out.trace.vhat_initial[k] = v_next.dot(init);
    if (config.track_optimism) {
      const ValueTable trunc = truncated_optimal_values(truth, bonus_reward,
                                                        cap);
      out.trace.trunc_opt_initial[k] = trunc.v[0].dot(init);
    }

    const Trajectory episode = sample_episode(env, policy, rng);
    for (const Step& step : episode) {
      out.data.tuples[k][step.h] = {step.state, step.action, step.next_state};
      const Vec phi =
          phi_hat[step.h].row(step.state * K + step.action).transpose();
      ridge[step.h].add(phi);
      feature_sums[step.h].col(step.next_state) += phi;
      out.trace.bonus_visited[k][step.h] =
          bonus_reward[step.h](step.state, step.action);
    }
  }
  out.data.ridge = std::move(ridge);
  return out;
}

RfePlanResult rfe_plan(const RfeDataset& data, const FeatureTable& phi_hat,
                       const RewardTable& reward, double beta) {
  const int S = data.num_states;
  const int K = data.num_actions;
  const int H = data.horizon;
  if (static_cast<int>(phi_hat.size()) != H ||
      static_cast<int>(reward.size()) != H ||
      static_cast<int>(data.ridge.size()) != H) {
    throw std::invalid_argument("horizon mismatch");
  }
  if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
  const int d = static_cast<int>(phi_hat[0].cols());
  const double cap = static_cast<double>(H);

  std::vector<Mat> feature_sums(H, Mat::Zero(d, S));
  for (const std::vector<RfeTransition>& episode : data.tuples) {
    for (int h = 0; h < H; ++h) {
      const RfeTransition& tr = episode[h];
      feature_sums[h].col(tr.next_state) +=
          phi_hat[h].row(tr.state * K + tr.action).transpose();
    }
  }

  RfePlanResult out;
  out.policy.action.assign(H, std::vector<int>(S, 0));
  out.values.v.assign(H + 1, Vec::Zero(S));
  out.values.q.assign(H, Mat::Zero(S, K));
  for (int h = H - 1; h >= 0; --h) {
    const Vec weights = data.ridge[h].solve(feature_sums[h] * out.values.v[h + 1]);
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      for (int a = 0; a < K; ++a) {
        const Vec phi = phi_hat[h].row(s * K + a).transpose();
        const double u = std::min(beta * data.ridge[h].bonus(phi), cap);
        const double q =
            std::clamp(phi.dot(weights) + reward[h](s, a) + u, 0.0, cap);
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

}  // namespace morl
