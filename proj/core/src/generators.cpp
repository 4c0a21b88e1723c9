#include "morl/generators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace morl {
namespace {

// Factor table whose d rows are probability distributions over next states;
// paired with simplex features every induced kernel row is a mixture of
// distributions, hence valid without clamping.
FactorTable random_stochastic_factors(int num_states, int horizon, int rank,
                                      Rng& rng) {
  FactorTable mu(horizon);
  for (int h = 0; h < horizon; ++h) {
    mu[h] = Mat(rank, num_states);
    for (int j = 0; j < rank; ++j) {
      mu[h].row(j) = rng.simplex(num_states).transpose();
    }
  }
  return mu;
}

Mat mix_rows_with_simplex(const Mat& base, double weight, Rng& rng) {
  Mat out = base;
  const int cols = static_cast<int>(base.cols());
  for (int i = 0; i < base.rows(); ++i) {
    Vec fresh = rng.simplex(cols);
    out.row(i) = (1.0 - weight) * base.row(i) + weight * fresh.transpose();
  }
  return out;
}

}  // namespace

CoverageCertificate aggregate_coverage(
    const std::vector<CoverageCertificate>& certs) {
  if (certs.empty()) {
    throw std::invalid_argument("no coverage certificates to aggregate");
  }
  CoverageCertificate agg;
  agg.omega = 0.0;
  agg.kappa = certs.front().kappa;
  agg.fully_reachable = true;
  for (const CoverageCertificate& c : certs) {
    agg.omega = std::max(agg.omega, c.omega);
    agg.kappa = std::min(agg.kappa, c.kappa);
    agg.fully_reachable = agg.fully_reachable && c.fully_reachable;
  }
  return agg;
}

TaskFamily gen_task_family(int num_states, int num_actions, int horizon,
                           int rank, int num_tasks, Rng& rng) {
  if (num_states < 1 || num_actions < 1 || horizon < 1 || rank < 1 ||
      num_tasks < 1) {
    throw std::invalid_argument("family dimensions must be positive");
  }
  TaskFamily family;
  family.num_states = num_states;
  family.num_actions = num_actions;
  family.horizon = horizon;
  family.rank = rank;

  // Shared features first, one simplex draw per (h, s, a). L1 norm 1 keeps
  // the Euclidean norm at most 1.
  FeatureTable phi(horizon);
  for (int h = 0; h < horizon; ++h) {
    phi[h] = Mat(num_states * num_actions, rank);
    for (int row = 0; row < phi[h].rows(); ++row) {
      phi[h].row(row) = rng.simplex(rank).transpose();
    }
  }

  family.tasks.reserve(num_tasks);
  for (int t = 0; t < num_tasks; ++t) {
    TabularLowRankMdp task;
    task.num_states = num_states;
    task.num_actions = num_actions;
    task.horizon = horizon;
    task.rank = rank;
    task.initial_state = 0;
    task.phi = phi;
    task.mu = random_stochastic_factors(num_states, horizon, rank, rng);
    task.reward.resize(horizon);
    for (int h = 0; h < horizon; ++h) {
      task.reward[h] = Mat(num_states, num_actions);
      for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
          task.reward[h](s, a) = rng.uniform();
        }
      }
    }
    family.tasks.push_back(std::move(task));
  }
  return family;
}

std::pair<StochasticPolicy, CoverageCertificate> gen_behavior_policy(
    const TabularLowRankMdp& mdp, double min_action_prob, Rng& rng) {
  const int S = mdp.num_states;
  const int K = mdp.num_actions;
  const int H = mdp.horizon;
  const double mix = static_cast<double>(K) * min_action_prob;
  if (min_action_prob < 0.0 || mix > 1.0) {
    throw std::invalid_argument(
        "min_action_prob must lie in [0, 1/num_actions]");
  }

  StochasticPolicy policy;
  policy.prob.resize(H);
  for (int h = 0; h < H; ++h) {
    policy.prob[h] = Mat(S, K);
    for (int s = 0; s < S; ++s) {
      Vec logits(K);
      for (int a = 0; a < K; ++a) logits(a) = rng.normal();
      const double zmax = logits.maxCoeff();
      Vec soft = (logits.array() - zmax).exp();
      soft /= soft.sum();
      policy.prob[h].row(s) =
          ((1.0 - mix) * soft.array() + min_action_prob).transpose();
    }
  }

  CoverageCertificate cert;
  double min_prob = 1.0;
  for (int h = 0; h < H; ++h) min_prob = std::min(min_prob, policy.prob[h].minCoeff());
  cert.omega = 1.0 / min_prob;

  const std::vector<Mat> occ =
      occupancy_measures(mdp.kernels(), policy, mdp.initial_distribution());
  double kappa = 1.0;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      kappa = std::min(kappa, occ[h].row(s).sum());
    }
  }
  cert.kappa = std::max(kappa, 0.0);
  cert.fully_reachable = cert.kappa > 0.0;
  return {std::move(policy), cert};
}

ModelClass gen_model_class(const TaskFamily& family, int num_phi_decoys,
                           int num_psi_decoys, double perturb_scale, Rng& rng,
                           double scale_decay) {
  if (num_phi_decoys < 0 || num_psi_decoys < 0) {
    throw std::invalid_argument("decoy counts must be nonnegative");
  }
  if (perturb_scale < 0.0 || perturb_scale > 1.0 || scale_decay <= 0.0 ||
      scale_decay > 1.0) {
    throw std::invalid_argument("perturbation parameters out of range");
  }
  const int T = family.num_tasks();
  ModelClass mc;
  mc.num_states = family.num_states;
  mc.num_actions = family.num_actions;
  mc.horizon = family.horizon;
  mc.rank = family.rank;

  mc.phis.push_back(family.shared_phi());
  for (int i = 0; i < num_phi_decoys; ++i) {
    const double w = perturb_scale * std::pow(scale_decay, i);
    FeatureTable decoy(family.horizon);
    for (int h = 0; h < family.horizon; ++h) {
      decoy[h] = mix_rows_with_simplex(family.shared_phi()[h], w, rng);
    }
    mc.phis.push_back(std::move(decoy));
  }

  for (int t = 0; t < T; ++t) mc.psis.push_back(family.tasks[t].mu);
  for (int j = 0; j < num_psi_decoys; ++j) {
    const int source_task = j % T;
    const int level = j / T;
    const double w = perturb_scale * std::pow(scale_decay, level);
    FactorTable decoy(family.horizon);
    for (int h = 0; h < family.horizon; ++h) {
      decoy[h] = mix_rows_with_simplex(family.tasks[source_task].mu[h], w, rng);
    }
    mc.psis.push_back(std::move(decoy));
  }
  return mc;
}

std::pair<TabularLowRankMdp, TargetTaskSpec> gen_target_task(
    const TaskFamily& family, const Vec& coeffs, double perturbation_weight,
    Rng& rng) {
  const int T = family.num_tasks();
  if (static_cast<int>(coeffs.size()) != T) {
    throw std::invalid_argument("coefficient count does not match task count");
  }
  if (coeffs.minCoeff() < 0.0 || std::abs(coeffs.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("coeffs must be a probability vector");
  }
  if (perturbation_weight < 0.0 || perturbation_weight >= 1.0) {
    throw std::invalid_argument("perturbation weight must lie in [0, 1)");
  }

  TabularLowRankMdp target;
  target.num_states = family.num_states;
  target.num_actions = family.num_actions;
  target.horizon = family.horizon;
  target.rank = family.rank;
  target.initial_state = 0;
  target.phi = family.shared_phi();

  FactorTable fresh = random_stochastic_factors(family.num_states,
                                                family.horizon, family.rank,
                                                rng);
  FactorTable mixture(family.horizon);
  target.mu.resize(family.horizon);
  for (int h = 0; h < family.horizon; ++h) {
    mixture[h] = Mat::Zero(family.rank, family.num_states);
    for (int t = 0; t < T; ++t) mixture[h] += coeffs(t) * family.tasks[t].mu[h];
    target.mu[h] = (1.0 - perturbation_weight) * mixture[h] +
                   perturbation_weight * fresh[h];
  }
  target.reward = gen_linear_reward(target.phi, family.num_actions, rng);

  TargetTaskSpec spec;
  spec.coeffs = coeffs;
  spec.c_l = coeffs.lpNorm<1>();
  spec.perturb_weight = perturbation_weight;
  spec.xi = 0.0;
  for (int h = 0; h < family.horizon; ++h) {
    const Mat pure = target.phi[h] * mixture[h];
    const Mat actual = target.phi[h] * target.mu[h];
    for (int row = 0; row < pure.rows(); ++row) {
      spec.xi = std::max(
          spec.xi, tv_distance(actual.row(row).transpose(),
                               pure.row(row).transpose()));
    }
  }
  return {std::move(target), spec};
}

RewardTable gen_linear_reward(const FeatureTable& phi, int num_actions,
                              Rng& rng) {
  if (phi.empty()) throw std::invalid_argument("empty feature table");
  if (num_actions < 1 || phi[0].rows() % num_actions != 0) {
    throw std::invalid_argument("feature rows not divisible by action count");
  }
  const int d = static_cast<int>(phi[0].cols());
  const int num_states = static_cast<int>(phi[0].rows()) / num_actions;
  RewardTable reward(phi.size());
  for (std::size_t h = 0; h < phi.size(); ++h) {
    Vec theta(d);
    for (int j = 0; j < d; ++j) theta(j) = rng.normal();
    const double norm = theta.norm();
    if (norm > 0.0) theta /= norm;
    theta *= std::pow(rng.uniform(), 1.0 / d);

    const Vec raw = phi[h] * theta;
    reward[h] = Mat(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        reward[h](s, a) =
            std::clamp(raw(s * num_actions + a), 0.0, 1.0);
      }
    }
  }
  return reward;
}

OfflineDataset gen_dataset(const TaskFamily& family,
                           const std::vector<StochasticPolicy>& behavior,
                           int episodes, Rng& rng) {
  if (static_cast<int>(behavior.size()) != family.num_tasks()) {
    throw std::invalid_argument("one behavior policy per task required");
  }
  OfflineDataset data =
      OfflineDataset::empty(family.num_tasks(), family.horizon,
                            family.num_states, family.num_actions);
  // Episode-major order: with a fixed seed, the first n episodes of every
  // task coincide across runs with different totals, so sample-size grids
  // are prefix-nested.
  for (int i = 0; i < episodes; ++i) {
    for (int t = 0; t < family.num_tasks(); ++t) {
      data.append_episode(t, sample_episode(family.tasks[t], behavior[t], rng));
    }
  }
  return data;
}

OfflineDataset gen_single_task_dataset(const TabularLowRankMdp& env,
                                       const StochasticPolicy& behavior,
                                       int episodes, Rng& rng) {
  OfflineDataset data = OfflineDataset::empty(1, env.horizon, env.num_states,
                                              env.num_actions);
  for (int i = 0; i < episodes; ++i) {
    data.append_episode(0, sample_episode(env, behavior, rng));
  }
  return data;
}

double measure_c_r(const ModelClass& model_class, int max_pairs) {
  const int P = model_class.size_phi();
  const int Q = model_class.size_psi();
  const int H = model_class.horizon;
  const long num_kernels = static_cast<long>(P) * Q;
  if (num_kernels < 2) return 1.0;

  auto kernel_row_pair = [&](long idx) {
    return std::pair<int, int>(static_cast<int>(idx / Q),
                               static_cast<int>(idx % Q));
  };
  auto ratio_for = [&](long ka, long kb) {
    const auto [pa, qa] = kernel_row_pair(ka);
    const auto [pb, qb] = kernel_row_pair(kb);
    double worst = 0.0;
    for (int h = 0; h < H; ++h) {
      const Mat k1 = model_class.phis[pa][h] * model_class.psis[qa][h];
      const Mat k2 = model_class.phis[pb][h] * model_class.psis[qb][h];
      double max_tv = 0.0;
      double sum_tv = 0.0;
      for (int row = 0; row < k1.rows(); ++row) {
        const double tv = tv_distance(k1.row(row).transpose(),
                                      k2.row(row).transpose());
        max_tv = std::max(max_tv, tv);
        sum_tv += tv;
      }
      const double mean_tv = sum_tv / static_cast<double>(k1.rows());
      if (mean_tv > 0.0) worst = std::max(worst, max_tv / mean_tv);
    }
    return worst;
  };

  double c_r = 1.0;
  const long total_pairs = num_kernels * (num_kernels - 1) / 2;
  if (total_pairs <= max_pairs) {
    for (long ka = 0; ka < num_kernels; ++ka) {
      for (long kb = ka + 1; kb < num_kernels; ++kb) {
        c_r = std::max(c_r, ratio_for(ka, kb));
      }
    }
  } else {
    Rng rng(derive_seed(0x6d6f726c2d637231ULL, static_cast<std::uint64_t>(P),
                        static_cast<std::uint64_t>(Q)));
    for (int i = 0; i < max_pairs; ++i) {
      const long ka = rng.uniform_int(static_cast<int>(num_kernels));
      long kb = rng.uniform_int(static_cast<int>(num_kernels) - 1);
      if (kb >= ka) ++kb;
      c_r = std::max(c_r, ratio_for(ka, kb));
    }
  }
  return c_r;
}

}  // namespace morl
