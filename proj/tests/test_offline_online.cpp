#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "morl/fixtures.hpp"
#include "morl/generators.hpp"
#include "morl/offline_online.hpp"
#include "test_support.hpp"

using namespace morl;

namespace {

// Exhaustive noiseless dataset for a deterministic environment: one episode
// per (s, a) pair, replayed at every step, with rewards read from the
// environment table. Gives each pair exactly one visit per step.
OfflineDataset exhaustive_dataset(const TabularLowRankMdp& env) {
  OfflineDataset data = OfflineDataset::empty(
      1, env.horizon, env.num_states, env.num_actions);
  const TransitionModel truth = env.kernels();
  for (int s = 0; s < env.num_states; ++s) {
    for (int a = 0; a < env.num_actions; ++a) {
      Trajectory episode;
      for (int h = 0; h < env.horizon; ++h) {
        int next = 0;
        truth.p[h].row(truth.sa(s, a)).maxCoeff(&next);
        episode.push_back({h, s, a, env.reward[h](s, a), next});
      }
      data.append_episode(0, episode);
    }
  }
  return data;
}

}  // namespace

TEST_CASE("pessimistic penalty scale matches the plug-in formula") {
  const int H = 3, d = 2, N = 500;
  const double delta = 0.1, xi = 0.2, c_beta = 2.0;
  const double iota = std::log(3.0 * 2.0 * 500.0 * 1.0 / 0.1);
  const double expected =
      c_beta * (H * d * std::sqrt(iota) + H * std::sqrt(2.0 * 500.0) * xi);
  CHECK(beta_pevi(H, d, N, delta, xi, c_beta) ==
        doctest::Approx(expected).epsilon(1e-12));

  // With xi = 0 only the leading term remains.
  CHECK(beta_pevi(H, d, N, delta, 0.0) ==
        doctest::Approx(H * d * std::sqrt(iota)).epsilon(1e-12));

  CHECK_THROWS(beta_pevi(0, d, N, delta, xi));
  CHECK_THROWS(beta_pevi(H, d, N, 1.0, xi));
  CHECK_THROWS(beta_pevi(H, d, N, delta, -0.1));
}

TEST_CASE("optimistic bonus scale matches the plug-in formula") {
  const int H = 3, d = 2, n = 7;
  const double delta = 0.1, xi = 0.3, c_l = 1.5, c_beta = 2.0;
  const double iota = std::log(3.0 * 2.0 * 7.0 * 1.0 / 0.1);
  const double expected =
      c_beta * (H * d * std::sqrt(iota) + H * std::sqrt(2.0 * 7.0) * xi +
                c_l * std::sqrt(3.0 * 2.0));
  CHECK(beta_lsvi(H, d, n, delta, xi, c_l, c_beta) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS(beta_lsvi(H, d, 0, delta, xi, c_l));
  CHECK_THROWS(beta_lsvi(H, d, n, delta, xi, 0.0));
}

TEST_CASE("pessimism on an empty dataset collapses to the zero policy") {
  const TaskFamily family = test_support::seed0_family();
  const OfflineDataset data = OfflineDataset::empty(1, 3, 5, 2);
  PeviConfig config;
  config.lambda_d = 1.0;
  config.beta = 0.0;
  config.xi_down = 0.0;
  const PeviResult result = pevi(data, family.shared_phi(), config);
  for (int h = 0; h < 3; ++h) {
    for (int s = 0; s < 5; ++s) CHECK(result.policy.action[h][s] == 0);
    CHECK(result.values.q[h].cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.gamma[h].cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(result.kappa_rho == 0.0);
  CHECK(result.refined_bound == 0.0);
}

TEST_CASE("exhaustive noiseless data recovers the optimal plan exactly") {
  Rng rng(derive_seed(21, stream::misc, 0));
  TabularLowRankMdp env = fixtures::deterministic_goto(5, 3, 4, rng);

  // Rewrite the reward so r_h(s,a) depends only on the successor state,
  // which makes it linear in the one-hot features e_{next(s,a)}.
  const TransitionModel truth = env.kernels();
  std::vector<Vec> theta(4);
  for (int h = 0; h < 4; ++h) {
    theta[h] = Vec::Zero(5);
    for (int s = 0; s < 5; ++s) theta[h](s) = rng.uniform();
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 3; ++a) {
        int next = 0;
        truth.p[h].row(truth.sa(s, a)).maxCoeff(&next);
        env.reward[h](s, a) = theta[h](next);
      }
    }
  }

  const OfflineDataset data = exhaustive_dataset(env);
  PeviConfig config;
  config.lambda_d = 1e-8;
  config.beta = 0.0;
  config.xi_down = 0.0;
  const PeviResult result = pevi(data, env.phi, config);

  const PlanResult best = optimal_plan(truth, env.reward);
  const ValueTable learned = evaluate_policy(truth, env.reward, result.policy);
  const double gap = best.values.v[0](env.initial_state) -
                     learned.v[0](env.initial_state);
  CHECK(gap >= -1e-12);
  CHECK(gap < 1e-6);
  for (int h = 0; h < 4; ++h) {
    CHECK((result.values.q[h] - best.values.q[h]).cwiseAbs().maxCoeff() <
          1e-5);
  }
}

TEST_CASE("coverage floor and refined bound have closed forms on a chain") {
  const TabularLowRankMdp chain = fixtures::identity_chain(4, 2, 3);
  const OfflineDataset data = exhaustive_dataset(chain);
  PeviConfig config;
  config.lambda_d = 0.5;
  config.beta = 0.0;
  config.xi_down = 0.0;
  config.delta = 0.1;
  const PeviResult result = pevi(data, chain.phi, config);

  // Eight episodes, each state feature e_s hit twice per step, so the mean
  // second moment is (2/8) I and its smallest eigenvalue is 1/4.
  CHECK(result.kappa_rho == doctest::Approx(0.25).epsilon(1e-12));
  const double iota = std::log(3.0 * 4.0 * 8.0 * 1.0 / 0.1);
  const double expected =
      (3.0 * 3.0 * 4.0 * std::sqrt(iota / 8.0)) / std::sqrt(0.25);
  CHECK(result.refined_bound == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pessimistic values respect the per-step clip") {
  const TaskFamily family = test_support::seed0_family();
  Rng target_rng(derive_seed(22, stream::target, 0));
  auto [target, spec] =
      gen_target_task(family, Vec::Constant(4, 0.25), 0.0, target_rng);
  (void)spec;
  Rng behavior_rng(derive_seed(22, stream::behavior, 0, 0));
  auto [behavior, cert] = gen_behavior_policy(target, 0.25, behavior_rng);
  (void)cert;
  Rng data_rng(derive_seed(22, stream::dataset, 0));
  const OfflineDataset data =
      gen_single_task_dataset(target, behavior, 400, data_rng);

  PeviConfig config;
  config.lambda_d = 1.0;
  config.beta = beta_pevi(3, 2, 400, 0.1, 0.0);
  config.xi_down = 0.0;
  const PeviResult result = pevi(data, family.shared_phi(), config);
  for (int h = 0; h < 3; ++h) {
    CHECK(result.values.q[h].minCoeff() >= 0.0);
    CHECK(result.values.q[h].maxCoeff() <= 3.0 - h + 1e-12);
    CHECK(result.gamma[h].minCoeff() >= 0.0);
  }
}

TEST_CASE("first online episode prices every pair by its feature norm") {
  const TaskFamily family = test_support::seed0_family();
  Rng target_rng(derive_seed(23, stream::target, 0));
  auto [target, spec] =
      gen_target_task(family, Vec::Constant(4, 0.25), 0.0, target_rng);
  (void)spec;
  Rng reward_rng(derive_seed(23, stream::reward, 0));
  const RewardTable reward = test_support::random_reward(5, 2, 3, reward_rng);

  LsviConfig config;
  config.lambda_d = 1.0;
  config.c_beta = 2.0;
  config.xi_down = 0.0;
  config.c_l = 1.0;
  config.delta = 0.1;
  config.episodes = 1;
  Rng rng(derive_seed(23, stream::online, 0));
  const LsviResult run =
      lsvi_ucb(target, family.shared_phi(), reward, config, rng);

  const double beta1 = beta_lsvi(3, 2, 1, 0.1, 0.0, 1.0, 2.0);
  for (int h = 0; h < 3; ++h) {
    const double cap = 3.0 - h;
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 2; ++a) {
        const double norm = family.shared_phi()[h].row(s * 2 + a).norm();
        const double expected = std::clamp(beta1 * norm, 0.0, cap);
        CHECK(run.qhat_trace[0][h](s, a) ==
              doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("a single-action environment makes the bonus scale irrelevant") {
  const TabularLowRankMdp chain = fixtures::identity_chain(3, 1, 4);
  Rng reward_rng(derive_seed(24, stream::reward, 0));
  const RewardTable reward = test_support::random_reward(3, 1, 4, reward_rng);

  DeterministicPolicy only;
  only.action.assign(4, std::vector<int>(3, 0));
  const double expected = evaluate_policy(chain.kernels(), reward, only)
                              .v[0](chain.initial_state);

  for (double c_beta : {0.01, 5.0}) {
    LsviConfig config;
    config.c_beta = c_beta;
    config.episodes = 6;
    Rng rng(derive_seed(24, stream::online, 1));
    const LsviResult run = lsvi_ucb(chain, chain.phi, reward, config, rng);
    CHECK(run.mixture_value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(run.optimal_value == doctest::Approx(expected).epsilon(1e-12));
    for (double v : run.episode_values) {
      CHECK(v == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixture value is the exact mean of episode values") {
  const TaskFamily family = test_support::seed0_family();
  Rng target_rng(derive_seed(25, stream::target, 0));
  auto [target, spec] =
      gen_target_task(family, Vec::Constant(4, 0.25), 0.0, target_rng);
  (void)spec;
  Rng reward_rng(derive_seed(25, stream::reward, 0));
  const RewardTable reward = test_support::random_reward(5, 2, 3, reward_rng);

  LsviConfig config;
  config.episodes = 30;
  Rng rng(derive_seed(25, stream::online, 0));
  const LsviResult run =
      lsvi_ucb(target, family.shared_phi(), reward, config, rng);
  REQUIRE(run.episode_values.size() == 30);
  double mean = 0.0;
  for (double v : run.episode_values) mean += v;
  mean /= 30.0;
  CHECK(run.mixture_value == doctest::Approx(mean).epsilon(1e-12));
  CHECK(run.optimal_value >= run.mixture_value - 1e-9);
}

TEST_CASE("a generous bonus keeps every optimistic value above the optimum") {
  const TaskFamily family = test_support::seed0_family();
  Rng target_rng(derive_seed(26, stream::target, 0));
  auto [target, spec] =
      gen_target_task(family, Vec::Constant(4, 0.25), 0.0, target_rng);
  (void)spec;
  Rng reward_rng(derive_seed(26, stream::reward, 0));
  const RewardTable reward = test_support::random_reward(5, 2, 3, reward_rng);

  LsviConfig config;
  config.c_beta = 1e3;
  config.episodes = 10;
  Rng rng(derive_seed(26, stream::online, 0));
  const LsviResult run =
      lsvi_ucb(target, family.shared_phi(), reward, config, rng);
  CHECK(optimism_violations(run, target, reward, 0.0) == 0);
}

TEST_CASE("a zero bonus under nonzero rewards breaks optimism immediately") {
  const TabularLowRankMdp env = fixtures::uniform_mdp(4, 3, 3);
  const RewardTable reward = test_support::constant_reward(4, 3, 3, 0.5);
  LsviConfig config;
  config.c_beta = 0.0;
  config.episodes = 1;
  Rng rng(derive_seed(27, stream::online, 0));
  const LsviResult run = lsvi_ucb(env, env.phi, reward, config, rng);
  CHECK(optimism_violations(run, env, reward, 0.0) > 0);
}

TEST_CASE("optimistic values respect the per-step clip") {
  const TaskFamily family = test_support::seed0_family();
  Rng target_rng(derive_seed(28, stream::target, 0));
  auto [target, spec] =
      gen_target_task(family, Vec::Constant(4, 0.25), 0.0, target_rng);
  (void)spec;
  Rng reward_rng(derive_seed(28, stream::reward, 0));
  const RewardTable reward = test_support::random_reward(5, 2, 3, reward_rng);
  LsviConfig config;
  config.episodes = 40;
  Rng rng(derive_seed(28, stream::online, 0));
  const LsviResult run =
      lsvi_ucb(target, family.shared_phi(), reward, config, rng);
  for (const std::vector<Mat>& qhat : run.qhat_trace) {
    for (int h = 0; h < 3; ++h) {
      CHECK(qhat[h].minCoeff() >= 0.0);
      CHECK(qhat[h].maxCoeff() <= 3.0 - h + 1e-12);
    }
  }
}
