#include "morl/verify.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "morl/downstream.hpp"
#include "morl/fixtures.hpp"
#include "morl/generators.hpp"
#include "morl/offline_online.hpp"
#include "morl/rfe.hpp"
#include "morl/serialization.hpp"
#include "morl/upstream.hpp"

namespace morl {
namespace {

CheckResult check(const std::string& name, double observed, double limit,
                  const std::string& detail = "") {
  CheckResult result;
  result.name = name;
  result.observed = observed;
  result.limit = limit;
  result.passed = observed <= limit;
  result.detail = detail;
  return result;
}

// Enumerates every deterministic policy of a small instance; the index is
// decoded digit by digit in base K across the (h, s) cells.
double brute_force_optimal_value(const TransitionModel& model,
                                 const RewardTable& reward, const Vec& init) {
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  long total = 1;
  for (int i = 0; i < S * H; ++i) total *= K;
  double best = -1e300;
  for (long code = 0; code < total; ++code) {
    DeterministicPolicy policy;
    policy.action.assign(H, std::vector<int>(S, 0));
    long rest = code;
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        policy.action[h][s] = static_cast<int>(rest % K);
        rest /= K;
      }
    }
    best = std::max(best,
                    initial_value(evaluate_policy(model, reward, policy), init));
  }
  return best;
}

}  // namespace

bool VerifyReport::all_passed() const {
  for (const CheckResult& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string VerifyReport::render() const {
  std::ostringstream out;
  for (const CheckResult& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " (observed "
        << c.observed << ", limit " << c.limit << ")";
    if (!c.detail.empty()) out << " " << c.detail;
    out << "\n";
  }
  return out.str();
}

VerifyReport verify_fast(std::uint64_t seed) {
  VerifyReport report;

  {
    // Identity chain: the state never moves, so the value of any fixed
    // action is H times its one-step reward.
    TabularLowRankMdp chain = fixtures::identity_chain(4, 2, 3);
    for (int h = 0; h < chain.horizon; ++h) {
      for (int s = 0; s < chain.num_states; ++s) {
        chain.reward[h](s, 0) = 0.25;
        chain.reward[h](s, 1) = 0.75;
      }
    }
    DeterministicPolicy fixed;
    fixed.action.assign(chain.horizon, std::vector<int>(chain.num_states, 1));
    const ValueTable values =
        evaluate_policy(chain.kernels(), chain.reward, fixed);
    const double expected = 3 * 0.75;
    report.checks.push_back(check("policy_evaluation_closed_form",
                                  std::abs(values.v[0](2) - expected), 1e-12));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 1));
    const TabularLowRankMdp env = fixtures::deterministic_goto(3, 2, 2, rng);
    const TransitionModel model = env.kernels();
    const Vec init = env.initial_distribution();
    const double planned =
        initial_value(optimal_plan(model, env.reward).values, init);
    const double brute = brute_force_optimal_value(model, env.reward, init);
    report.checks.push_back(
        check("optimal_plan_vs_enumeration", std::abs(planned - brute), 1e-12));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 2));
    TaskFamily family = gen_task_family(4, 2, 3, 2, 2, rng);
    auto [policy, cert] = gen_behavior_policy(family.tasks[0], 0.1, rng);
    const SimulationLemmaSides sides = simulation_lemma_sides(
        family.tasks[0].kernels(), family.tasks[0].reward,
        family.tasks[1].kernels(), family.tasks[1].reward, policy,
        family.tasks[0].initial_distribution());
    const double err =
        std::max(std::abs(sides.lhs - sides.rhs_under_p2),
                 std::abs(sides.lhs - sides.rhs_under_p1));
    report.checks.push_back(check("simulation_lemma_both_expansions", err,
                                  1e-9));

    // Occupancy and value duality: the initial value equals the
    // occupancy-weighted sum of rewards.
    const TransitionModel truth = family.tasks[0].kernels();
    const std::vector<Mat> occ = occupancy_measures(
        truth, policy, family.tasks[0].initial_distribution());
    double dual = 0.0;
    for (int h = 0; h < family.horizon; ++h) {
      dual += occ[h].cwiseProduct(family.tasks[0].reward[h]).sum();
    }
    const double direct = initial_value(
        evaluate_policy(truth, family.tasks[0].reward, policy),
        family.tasks[0].initial_distribution());
    report.checks.push_back(
        check("occupancy_value_duality", std::abs(dual - direct), 1e-9));
    report.checks.push_back(check("occupancy_rows_sum_to_one",
                                  std::abs(occ[1].sum() - 1.0), 1e-9));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 3));
    TaskFamily family = gen_task_family(4, 2, 3, 2, 2, rng);
    auto [behavior, cert] = gen_behavior_policy(family.tasks[0], 0.2, rng);
    OfflineDataset data =
        gen_dataset(family, {behavior, behavior}, 50, rng);
    const Mat sigma =
        empirical_covariance(family.shared_phi()[1], data, 0, 1, 0.5);
    Mat oracle = 0.5 * Mat::Identity(2, 2);
    for (const Transition& tr : data.tuples[0][1]) {
      const Vec phi = family.shared_phi()[1]
                          .row(tr.state * 2 + tr.action)
                          .transpose();
      oracle += phi * phi.transpose();
    }
    report.checks.push_back(check("covariance_matches_scalar_loop",
                                  (sigma - oracle).cwiseAbs().maxCoeff(),
                                  1e-10));

    CovarianceState cov = covariance_state(family.shared_phi(), data, 0.5);
    PenaltyTable penalties = penalty_table(family.shared_phi(), cov, 1.3, 2);
    double worst = 0.0;
    for (int h = 0; h < family.horizon; ++h) {
      for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 2; ++a) {
          const Vec phi = family.shared_phi()[h].row(s * 2 + a).transpose();
          const double direct = std::min(
              1.3 * std::sqrt(phi.dot(cov.at(0, h).inverse() * phi)), 1.0);
          worst = std::max(worst,
                           std::abs(direct - penalties.b[0][h](s, a)));
        }
      }
    }
    report.checks.push_back(
        check("penalty_matches_explicit_inverse", worst, 1e-10));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 4));
    double max_excess = -1e300;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Mat> stream;
      for (int i = 0; i < 40; ++i) {
        Vec v(3);
        for (int j = 0; j < 3; ++j) v(j) = rng.normal();
        if (v.norm() > 0.0) v /= v.norm();
        stream.push_back(v * v.transpose());
      }
      const EllipticalPotential pot = elliptical_potential_check(stream, 1.0);
      max_excess = std::max(max_excess, pot.lhs - pot.rhs);
    }
    report.checks.push_back(
        check("elliptical_potential_inequality", max_excess, 0.0));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 5));
    RidgeState state(3, 1.0);
    Vec query(3);
    for (int j = 0; j < 3; ++j) query(j) = rng.normal();
    if (query.norm() > 0.0) query /= query.norm();
    double previous = state.bonus(query);
    double worst_increase = 0.0;
    for (int i = 0; i < 100; ++i) {
      Vec v(3);
      for (int j = 0; j < 3; ++j) v(j) = rng.normal();
      if (v.norm() > 0.0) v /= v.norm();
      state.add(v);
      const double current = state.bonus(query);
      worst_increase = std::max(worst_increase, current - previous);
      previous = current;
    }
    report.checks.push_back(
        check("bonus_monotone_nonincreasing", worst_increase, 1e-12));

    std::vector<Vec> phis;
    std::vector<double> targets;
    Mat design = Mat::Identity(3, 3);
    Vec moment = Vec::Zero(3);
    for (int i = 0; i < 500; ++i) {
      Vec v(3);
      for (int j = 0; j < 3; ++j) v(j) = rng.normal();
      const double y = rng.uniform();
      phis.push_back(v);
      targets.push_back(y);
      design += v * v.transpose();
      moment += y * v;
    }
    const Vec w = ridge_weights(phis, targets, 1.0);
    report.checks.push_back(
        check("ridge_solve_residual", (design * w - moment).norm(), 1e-8));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 6));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 3, rng);
    Vec coeffs = Vec::Constant(3, 1.0 / 3.0);
    auto [target, spec] = gen_target_task(family, coeffs, 0.0, rng);
    const FeatureErrorResult fit =
        approx_feature_error(family.shared_phi(), target);
    report.checks.push_back(
        check("exact_feature_fits_own_kernel", fit.max_error, 1e-8));

    const std::string round_trip = to_json(mdp_from_json(to_json(target)));
    report.checks.push_back(check("mdp_json_round_trip_stable",
                                  round_trip == to_json(target) ? 0.0 : 1.0,
                                  0.0));
  }

  return report;
}

VerifyReport verify_statistical(std::uint64_t seed) {
  VerifyReport report;

  {
    // Sampled next-state frequencies against the model row.
    Rng rng(derive_seed(seed, stream::misc, 10));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 1, rng);
    const Vec row = family.tasks[0].transition_distribution(0, 2, 1);
    const int draws = 100000;
    Vec counts = Vec::Zero(5);
    for (int i = 0; i < draws; ++i) counts(rng.categorical(row)) += 1.0;
    double worst_z = 0.0;
    for (int s = 0; s < 5; ++s) {
      const double p = row(s);
      const double sd = std::sqrt(std::max(p * (1.0 - p) / draws, 1e-12));
      worst_z = std::max(worst_z, std::abs(counts(s) / draws - p) / sd);
    }
    report.checks.push_back(check("transition_frequency_z", worst_z, 5.0));
  }

  {
    Rng rng(derive_seed(seed, stream::misc, 11));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 1, rng);
    auto [policy, cert] = gen_behavior_policy(family.tasks[0], 0.2, rng);
    const double exact = initial_value(
        evaluate_policy(family.tasks[0].kernels(), family.tasks[0].reward,
                        policy),
        family.tasks[0].initial_distribution());
    const int episodes = 100000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < episodes; ++i) {
      double ret = 0.0;
      for (const Step& step : sample_episode(family.tasks[0], policy, rng)) {
        ret += step.reward;
      }
      sum += ret;
      sum_sq += ret * ret;
    }
    const double mean = sum / episodes;
    const double var = std::max(sum_sq / episodes - mean * mean, 1e-12);
    const double z = std::abs(mean - exact) / std::sqrt(var / episodes);
    report.checks.push_back(check("monte_carlo_return_z", z, 5.0));
  }

  {
    // Model selection recovers the true feature table at moderate n.
    Rng rng(derive_seed(seed, stream::misc, 12));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 2, rng);
    std::vector<StochasticPolicy> behaviors;
    std::vector<CoverageCertificate> certs;
    for (int t = 0; t < 2; ++t) {
      auto [policy, cert] = gen_behavior_policy(family.tasks[t], 0.2, rng);
      behaviors.push_back(std::move(policy));
      certs.push_back(cert);
    }
    const ModelClass mc = gen_model_class(family, 5, 6, 0.25, rng);
    const OfflineDataset data = gen_dataset(family, behaviors, 2000, rng);
    const LearnedModel learned = fit_model(mc, data);
    double wrong = 0.0;
    for (int h = 0; h < family.horizon; ++h) {
      if (learned.phi_index[h] != 0) wrong += 1.0;
    }
    report.checks.push_back(check("mle_recovers_truth_at_n2000", wrong, 0.0));
  }

  {
    // Pessimism of the penalized comparator value, one seeded run.
    Rng rng(derive_seed(seed, stream::misc, 13));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 4, rng);
    std::vector<StochasticPolicy> behaviors;
    std::vector<CoverageCertificate> certs;
    std::vector<RewardTable> rewards;
    for (int t = 0; t < 4; ++t) {
      auto [policy, cert] = gen_behavior_policy(family.tasks[t], 0.2, rng);
      behaviors.push_back(std::move(policy));
      certs.push_back(cert);
      rewards.push_back(family.tasks[t].reward);
    }
    const ModelClass mc = gen_model_class(family, 5, 6, 0.25, rng);
    const OfflineDataset data = gen_dataset(family, behaviors, 2000, rng);
    const CoverageCertificate agg = aggregate_coverage(certs);
    const double lambda =
        lambda_from_theory(1.0, mc.size_phi(), mc.size_psi(), 4, 2000, 3, 0.1);
    const MorlOutput out = run_morl(data, mc, rewards, lambda,
                                    AlphaTheory{agg.omega, 0.1});
    const UpstreamReport rep = build_upstream_report(
        out, data, family, behaviors, certs, rewards, mc, 0.1);
    report.checks.push_back(check("pessimism_gap_below_bound",
                                  rep.pessimism_gap, rep.pessimism_bound));
  }

  {
    // Optimism of exploration values with the true features.
    Rng rng(derive_seed(seed, stream::misc, 14));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 1, rng);
    RfeConfig config;
    config.episodes = 50;
    config.track_optimism = true;
    config.beta = beta_rfe(3, 2, config.episodes, 0.1, 1.0, 0.0);
    const RfeExploreResult result =
        rfe_explore(family.tasks[0], family.shared_phi(), config, rng);
    double worst = -1e300;
    for (int k = 0; k < config.episodes; ++k) {
      worst = std::max(worst, result.trace.trunc_opt_initial[k] -
                                  result.trace.vhat_initial[k]);
    }
    report.checks.push_back(check("rfe_optimism_with_true_features", worst,
                                  1e-6));
  }

  {
    // Online optimism monitor with the true features.
    Rng rng(derive_seed(seed, stream::misc, 15));
    TaskFamily family = gen_task_family(5, 2, 3, 2, 1, rng);
    LsviConfig config;
    config.episodes = 200;
    const LsviResult run = lsvi_ucb(family.tasks[0], family.shared_phi(),
                                    family.tasks[0].reward, config, rng);
    const long violations = optimism_violations(
        run, family.tasks[0], family.tasks[0].reward, 0.0);
    report.checks.push_back(check("lsvi_optimism_violations",
                                  static_cast<double>(violations), 0.0,
                                  "true features, default bonus"));
  }

  return report;
}

VerifyReport validate_mdp_file(const std::string& path) {
  VerifyReport report;
  TabularLowRankMdp mdp;
  try {
    mdp = mdp_from_json(read_text_file(path));
    report.checks.push_back(check("parse", 0.0, 0.0));
  } catch (const std::exception& e) {
    report.checks.push_back(check("parse", 1.0, 0.0, e.what()));
    return report;
  }
  const std::vector<std::string> issues = mdp.validate();
  std::string joined;
  for (const std::string& issue : issues) {
    if (!joined.empty()) joined += "; ";
    joined += issue;
  }
  report.checks.push_back(check("model_invariants",
                                static_cast<double>(issues.size()), 0.0,
                                joined));
  return report;
}

}  // namespace morl
