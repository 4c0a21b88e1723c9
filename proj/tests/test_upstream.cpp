#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "morl/fixtures.hpp"
#include "morl/generators.hpp"
#include "morl/upstream.hpp"
#include "test_support.hpp"

using namespace morl;

namespace {

struct Pipeline {
  TaskFamily family;
  std::vector<StochasticPolicy> behaviors;
  std::vector<CoverageCertificate> certs;
  ModelClass mc;
  OfflineDataset data;
  std::vector<RewardTable> rewards;
};

Pipeline make_pipeline(int episodes, int phi_decoys, int psi_decoys,
                       std::uint64_t seed = 0) {
  Pipeline p;
  p.family = test_support::seed0_family();
  for (int t = 0; t < 4; ++t) {
    Rng rng(derive_seed(seed, stream::behavior, static_cast<std::uint64_t>(t),
                        0));
    auto [policy, cert] = gen_behavior_policy(p.family.tasks[t], 0.25, rng);
    p.behaviors.push_back(std::move(policy));
    p.certs.push_back(cert);
  }
  Rng class_rng(derive_seed(seed, stream::model_class));
  p.mc = gen_model_class(p.family, phi_decoys, psi_decoys, 0.2, class_rng);
  p.data = test_support::collect_dataset(p.family, p.behaviors, episodes, seed);
  for (int t = 0; t < 4; ++t) p.rewards.push_back(p.family.tasks[t].reward);
  return p;
}

}  // namespace

TEST_CASE("theory alpha and zeta match hand arithmetic in log space") {
  const int n = 2000, d = 2, T = 4, H = 3;
  const int size_phi = 8, size_psi = 12;
  const double delta = 0.1, omega = 3.5, lambda = 5.0;
  const AlphaInfo info =
      alpha_from_theory(n, omega, lambda, d, size_phi, size_psi, T, H, delta);
  const double log_term = std::log(2.0) + std::log(8.0) + 4 * std::log(12.0) +
                          std::log(2000.0) + std::log(3.0) - std::log(0.1);
  CHECK(info.zeta_n == doctest::Approx(2.0 * log_term / n).epsilon(1e-12));
  CHECK(info.alpha ==
        doctest::Approx(std::sqrt(4.0 * omega * log_term + lambda * d))
            .epsilon(1e-12));
  // The alpha definition sqrt(2 n omega zeta + lambda d) written directly.
  CHECK(info.alpha ==
        doctest::Approx(std::sqrt(2.0 * n * omega * info.zeta_n + lambda * d))
            .epsilon(1e-12));
}

TEST_CASE("theory ridge scale matches hand arithmetic") {
  const double lambda = lambda_from_theory(1.0, 8, 12, 4, 2000, 3, 0.1);
  const double expected = std::log(8.0) + 4 * std::log(12.0) +
                          std::log(2000.0) + std::log(3.0) - std::log(0.1);
  CHECK(lambda == doctest::Approx(expected).epsilon(1e-12));
  CHECK(lambda_from_theory(2.5, 8, 12, 4, 2000, 3, 0.1) ==
        doctest::Approx(2.5 * expected).epsilon(1e-12));
  CHECK_THROWS(lambda_from_theory(0.0, 8, 12, 4, 2000, 3, 0.1));
}

TEST_CASE("covariance matches a scalar accumulation loop") {
  const Pipeline p = make_pipeline(150, 3, 4);
  const FeatureTable& phi = p.family.shared_phi();
  for (int t = 0; t < 4; ++t) {
    for (int h = 0; h < 3; ++h) {
      const Mat sigma = empirical_covariance(phi[h], p.data, t, h, 2.0);
      Mat manual = 2.0 * Mat::Identity(2, 2);
      for (const Transition& tr : p.data.tuples[t][h]) {
        const Vec f = phi[h].row(p.data.sa(tr.state, tr.action)).transpose();
        manual += f * f.transpose();
      }
      CHECK((sigma - manual).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("penalties match an explicit inverse and stay in [0,1]") {
  const Pipeline p = make_pipeline(200, 3, 4);
  const FeatureTable& phi = p.family.shared_phi();
  const CovarianceState cov = covariance_state(phi, p.data, 1.5);
  const double alpha = 3.0;
  const PenaltyTable table = penalty_table(phi, cov, alpha, 2);
  for (int t = 0; t < 4; ++t) {
    for (int h = 0; h < 3; ++h) {
      const Mat inv = cov.at(t, h).inverse();
      for (int s = 0; s < 5; ++s) {
        for (int a = 0; a < 2; ++a) {
          const Vec f = phi[h].row(p.data.sa(s, a)).transpose();
          const double expected =
              std::min(alpha * std::sqrt(f.dot(inv * f)), 1.0);
          CHECK(table.b[t][h](s, a) ==
                doctest::Approx(expected).epsilon(1e-10));
          CHECK(table.b[t][h](s, a) >= 0.0);
          CHECK(table.b[t][h](s, a) <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("adding data never increases any penalty entry") {
  const Pipeline small = make_pipeline(100, 0, 0);
  const Pipeline big = make_pipeline(400, 0, 0);
  const FeatureTable& phi = small.family.shared_phi();
  const double lambda = 1.0, alpha = 5.0;
  const PenaltyTable b_small =
      penalty_table(phi, covariance_state(phi, small.data, lambda), alpha, 2);
  const PenaltyTable b_big =
      penalty_table(phi, covariance_state(phi, big.data, lambda), alpha, 2);
  // Episode-major generation nests the smaller dataset inside the larger
  // one, so every covariance only gains rank-one terms.
  for (int t = 0; t < 4; ++t) {
    for (int h = 0; h < 3; ++h) {
      CHECK((b_big.b[t][h] - b_small.b[t][h]).maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("zero alpha with a truth-only class recovers optimal policies") {
  const Pipeline p = make_pipeline(50, 0, 0);
  const MorlOutput out =
      run_morl(p.data, p.mc, p.rewards, 1.0, AlphaManual{0.0});
  std::vector<DeterministicPolicy> comparators;
  for (int t = 0; t < 4; ++t) {
    comparators.push_back(
        optimal_plan(p.family.tasks[t].kernels(), p.rewards[t]).policy);
  }
  CHECK(avg_suboptimality(out.policies, comparators, p.family, p.rewards) <=
        1e-9);
}

TEST_CASE("single-task chain pessimistic value is hand computable") {
  // One state-action pair per step: Sigma = lambda I + n e0 e0', so the
  // penalty at the only reachable pair is min(alpha / sqrt(lambda + n), 1)
  // and the planned pessimistic value telescopes.
  const int H = 3, n = 40;
  TaskFamily family;
  family.num_states = 2;
  family.num_actions = 1;
  family.horizon = H;
  family.rank = 2;
  family.tasks.push_back(fixtures::identity_chain(2, 1, H));
  for (int h = 0; h < H; ++h) family.tasks[0].reward[h](0, 0) = 0.9;

  ModelClass mc;
  mc.num_states = 2;
  mc.num_actions = 1;
  mc.horizon = H;
  mc.rank = 2;
  mc.phis.push_back(family.shared_phi());
  mc.psis.push_back(family.tasks[0].mu);

  OfflineDataset data = OfflineDataset::empty(1, H, 2, 1);
  for (int i = 0; i < n; ++i) {
    Trajectory episode;
    for (int h = 0; h < H; ++h) episode.push_back({h, 0, 0, 0.9, 0});
    data.append_episode(0, episode);
  }

  const double lambda = 1.0, alpha = 4.0;
  const MorlOutput out = run_morl(data, mc, {family.tasks[0].reward}, lambda,
                                  AlphaManual{alpha});
  const double b = std::min(alpha / std::sqrt(lambda + n), 1.0);
  const double expected_value = H * (0.9 - b);
  RewardTable penalized = family.tasks[0].reward;
  for (int h = 0; h < H; ++h) penalized[h] -= out.penalties.b[0][h];
  const ValueTable vt =
      evaluate_policy(out.learned.p_hat[0], penalized, out.policies[0]);
  CHECK(out.penalties.b[0][0](0, 0) == doctest::Approx(b).epsilon(1e-12));
  CHECK(vt.v[0](0) == doctest::Approx(expected_value).epsilon(1e-10));
}

TEST_CASE("learned truth has zero average TV error") {
  const Pipeline p = make_pipeline(60, 0, 0);
  const LearnedModel learned = fit_model(p.mc, p.data);
  for (int h = 0; h < 3; ++h) {
    CHECK(avg_tv_error(learned, p.family, p.behaviors, h) <= 1e-12);
  }
}

TEST_CASE("average TV error matches a Monte-Carlo occupancy estimate") {
  const Pipeline p = make_pipeline(400, 7, 8);
  const MorlOutput out =
      run_morl(p.data, p.mc, p.rewards, 1.0, AlphaManual{0.0});
  const int h = 1;
  const double exact = avg_tv_error(out.learned, p.family, p.behaviors, h);

  std::vector<Mat> occ_h;
  for (int t = 0; t < 4; ++t) {
    occ_h.push_back(occupancy_measures(
        p.family.tasks[t].kernels(), p.behaviors[t],
        p.family.tasks[t].initial_distribution())[h]);
  }

  Rng rng(77);
  const int draws = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < draws; ++i) {
    double avg = 0.0;
    for (int t = 0; t < 4; ++t) {
      // Draw one (s,a) pair from the step-h occupancy (column-major scan).
      const double u = rng.uniform();
      int idx = static_cast<int>(occ_h[t].size()) - 1;
      double acc = 0.0;
      for (int j = 0; j < occ_h[t].size(); ++j) {
        acc += occ_h[t](j % 5, j / 5);
        if (u <= acc) {
          idx = j;
          break;
        }
      }
      const int s = idx % 5;
      const int a = idx / 5;
      const Vec truth =
          p.family.tasks[t].transition_distribution(h, s, a);
      const Vec est =
          out.learned.p_hat[t].p[h].row(p.data.sa(s, a)).transpose();
      avg += tv_distance(truth, est) / 4.0;
    }
    sum += avg;
    sumsq += avg * avg;
  }
  const double mean = sum / draws;
  const double stderr_mc =
      std::sqrt((sumsq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - exact) <= 3 * stderr_mc + 1e-9);
}

TEST_CASE("suboptimality is zero against itself and H at the extremes") {
  const Pipeline p = make_pipeline(30, 0, 0);
  std::vector<DeterministicPolicy> comparators;
  for (int t = 0; t < 4; ++t) {
    comparators.push_back(
        optimal_plan(p.family.tasks[t].kernels(), p.rewards[t]).policy);
  }
  CHECK(avg_suboptimality(comparators, comparators, p.family, p.rewards) ==
        0.0);

  // Chain with one paying action: the worst policy loses H.
  TaskFamily chain_family;
  chain_family.num_states = 2;
  chain_family.num_actions = 2;
  chain_family.horizon = 3;
  chain_family.rank = 2;
  chain_family.tasks.push_back(fixtures::identity_chain(2, 2, 3));
  RewardTable reward = test_support::constant_reward(2, 2, 3, 0.0);
  for (int h = 0; h < 3; ++h) reward[h](0, 0) = 1.0;
  DeterministicPolicy best, worst;
  best.action.assign(3, std::vector<int>(2, 0));
  worst.action.assign(3, std::vector<int>(2, 1));
  CHECK(avg_suboptimality({worst}, {best}, chain_family, {reward}) ==
        doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("relative condition number basics") {
  const Mat identity = Mat::Identity(2, 2);
  CHECK(relative_condition_number(identity, identity) ==
        doctest::Approx(1.0).epsilon(1e-10));
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 0.5;
  CHECK(relative_condition_number(a, identity) ==
        doctest::Approx(2.0).epsilon(1e-10));

  Mat b_singular = Mat::Zero(2, 2);
  b_singular(0, 0) = 1.0;
  Mat a_outside = Mat::Zero(2, 2);
  a_outside(1, 1) = 1.0;
  CHECK(std::isinf(relative_condition_number(a_outside, b_singular)));
  // Mass inside the range stays finite.
  Mat a_inside = Mat::Zero(2, 2);
  a_inside(0, 0) = 3.0;
  CHECK(relative_condition_number(a_inside, b_singular) ==
        doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("condition number dominates a random-direction scan within 1%") {
  const Pipeline p = make_pipeline(10, 0, 0);
  Rng rng(55);
  const DeterministicPolicy policy =
      test_support::random_deterministic_policy(5, 2, 3, rng);
  for (int h = 0; h < 3; ++h) {
    const double c = relative_condition_number(p.family, 0, policy,
                                               p.behaviors[0], h);
    if (std::isinf(c)) continue;
    // Second moments recomputed here for the scan.
    const std::vector<Mat> occ_b = occupancy_measures(
        p.family.tasks[0].kernels(), p.behaviors[0],
        p.family.tasks[0].initial_distribution());
    StochasticPolicy as_stochastic;
    as_stochastic.prob.assign(3, Mat::Zero(5, 2));
    for (int hh = 0; hh < 3; ++hh) {
      for (int s = 0; s < 5; ++s) {
        as_stochastic.prob[hh](s, policy.action[hh][s]) = 1.0;
      }
    }
    const std::vector<Mat> occ_p = occupancy_measures(
        p.family.tasks[0].kernels(), as_stochastic,
        p.family.tasks[0].initial_distribution());
    Mat a = Mat::Zero(2, 2), b = Mat::Zero(2, 2);
    for (int s = 0; s < 5; ++s) {
      for (int act = 0; act < 2; ++act) {
        const Vec f =
            p.family.shared_phi()[h].row(s * 2 + act).transpose();
        a += occ_p[h](s, act) * f * f.transpose();
        b += occ_b[h](s, act) * f * f.transpose();
      }
    }
    double scan = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Vec x(2);
      x << rng.normal(), rng.normal();
      const double denom = x.dot(b * x);
      if (denom <= 1e-14) continue;
      scan = std::max(scan, x.dot(a * x) / denom);
    }
    CHECK(scan <= c * (1.0 + 1e-9));
    CHECK(scan >= c * 0.99);
  }
}

TEST_CASE("pessimism gap is nonpositive under the true model") {
  const Pipeline p = make_pipeline(80, 0, 0);
  const MorlOutput out =
      run_morl(p.data, p.mc, p.rewards, 1.0, AlphaManual{2.0});
  std::vector<DeterministicPolicy> comparators;
  for (int t = 0; t < 4; ++t) {
    comparators.push_back(
        optimal_plan(p.family.tasks[t].kernels(), p.rewards[t]).policy);
  }
  CHECK(pessimism_gap(out.learned, out.penalties, comparators, p.family,
                      p.rewards) <= 1e-12);
  const MorlOutput no_penalty =
      run_morl(p.data, p.mc, p.rewards, 1.0, AlphaManual{0.0});
  CHECK(std::abs(pessimism_gap(no_penalty.learned, no_penalty.penalties,
                               comparators, p.family, p.rewards)) <= 1e-12);
}

TEST_CASE("report bounds are recomputable from the run parameters") {
  const Pipeline p = make_pipeline(500, 7, 8);
  const double delta = 0.1;
  const double lambda = lambda_from_theory(1.0, 8, 12, 4, 500, 3, delta);
  const CoverageCertificate agg = aggregate_coverage(p.certs);
  const MorlOutput out =
      run_morl(p.data, p.mc, p.rewards, lambda, AlphaTheory{agg.omega, delta});
  const UpstreamReport report =
      build_upstream_report(out, p.data, p.family, p.behaviors, p.certs,
                            p.rewards, p.mc, delta);

  const double log2_term = std::log(2.0) + std::log(8.0) +
                           4 * std::log(12.0) + std::log(500.0) +
                           std::log(3.0) - std::log(delta);
  CHECK(report.zeta_n == doctest::Approx(2 * log2_term / 500).epsilon(1e-12));
  CHECK(report.tv_bound ==
        doctest::Approx(std::sqrt(report.zeta_n / 4)).epsilon(1e-12));
  CHECK(report.pessimism_bound ==
        doctest::Approx(3 * std::sqrt(report.omega * report.zeta_n / 4))
            .epsilon(1e-12));
  const double log_term = log2_term - std::log(2.0);
  CHECK(report.subopt_bound ==
        doctest::Approx(9 * 2 * std::sqrt(2.0) * report.omega *
                        std::sqrt(report.c_star * log_term / 500))
            .epsilon(1e-9));
  CHECK(report.realizable);
  CHECK(report.omega == agg.omega);
  CHECK(report.alpha == out.alpha_info.alpha);
  CHECK(report.c_star >= 1.0 - 1e-9);
  for (int h = 0; h < 3; ++h) CHECK(report.avg_tv[h] >= 0.0);
}

TEST_CASE("reports flag non-realizable classes") {
  const Pipeline p = make_pipeline(50, 2, 2);
  ModelClass decoys_only = p.mc;
  decoys_only.phis.erase(decoys_only.phis.begin());  // drop the truth
  const MorlOutput out =
      run_morl(p.data, decoys_only, p.rewards, 1.0, AlphaManual{0.5});
  const UpstreamReport report =
      build_upstream_report(out, p.data, p.family, p.behaviors, p.certs,
                            p.rewards, decoys_only, 0.1);
  CHECK(!report.realizable);
}
