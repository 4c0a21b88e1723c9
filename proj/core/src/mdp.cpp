#include "morl/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace morl {

namespace {

constexpr double kNegClamp = 1e-12;
constexpr double kRowSumTol = 1e-9;
constexpr double kNormSlack = 1e-9;
// Fixed seed for the factor-norm test battery; frozen so validation is
// reproducible.
constexpr std::uint64_t kBatterySeed = 0x6d6f726c2d626174ULL;
constexpr int kBatteryDraws = 64;

void check_index(int h, int s, int a, int H, int S, int K) {
  if (h < 0 || h >= H || s < 0 || s >= S || a < 0 || a >= K) {
    std::ostringstream os;
    os << "index out of range: h=" << h << " s=" << s << " a=" << a;
    throw std::out_of_range(os.str());
  }
}

// Clamps tiny negative entries to zero per the model contract and
// renormalizes when doing so removed mass. Entries below -1e-12 indicate an
// invalid factorization and throw.
void clamp_row(Eigen::Ref<Vec> row) {
  double removed = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row[i] < 0.0) {
      if (row[i] < -kNegClamp) {
        throw std::domain_error(
            "transition mass below -1e-12; kernel factorization invalid");
      }
      removed -= row[i];
      row[i] = 0.0;
    }
  }
  if (removed > 0.0) {
    const double total = row.sum();
    if (total > 0.0) row /= total;
  }
}

// Shared Q-step so that evaluation and planning perform bitwise-identical
// arithmetic: Q_h(s,a) = r_h(s,a) + P_h(.|s,a) . v_next.
Mat step_q(const TransitionModel& model, const Mat& reward_h, int h,
           const Vec& v_next) {
  const int S = model.num_states;
  const int K = model.num_actions;
  Mat q(S, K);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < K; ++a) {
      q(s, a) = reward_h(s, a) + model.p[h].row(model.sa(s, a)).dot(v_next);
    }
  }
  return q;
}

void check_eval_inputs(const TransitionModel& model,
                       const RewardTable& reward) {
  if (static_cast<int>(reward.size()) != model.horizon ||
      static_cast<int>(model.p.size()) != model.horizon) {
    throw std::invalid_argument("horizon mismatch between model and rewards");
  }
  for (const Mat& r : reward) {
    if (r.rows() != model.num_states || r.cols() != model.num_actions) {
      throw std::invalid_argument("reward table shape mismatch");
    }
    if (r.hasNaN()) throw std::invalid_argument("reward table contains NaN");
  }
}

int policy_action(const DeterministicPolicy& p, int h, int s) {
  return p.action[h][s];
}

}  // namespace

Vec TabularLowRankMdp::transition_distribution(int h, int s, int a) const {
  check_index(h, s, a, horizon, num_states, num_actions);
  Vec row = mu[h].transpose() * phi[h].row(sa(s, a)).transpose();
  clamp_row(row);
  return row;
}

TransitionModel TabularLowRankMdp::kernels() const {
  TransitionModel m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.horizon = horizon;
  m.p.reserve(horizon);
  for (int h = 0; h < horizon; ++h) {
    Mat p = phi[h] * mu[h];  // (S*K) x S
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      Vec row = p.row(r).transpose();
      clamp_row(row);
      p.row(r) = row.transpose();
    }
    m.p.push_back(std::move(p));
  }
  return m;
}

Vec TabularLowRankMdp::initial_distribution() const {
  if (initial_dist.size() > 0) return initial_dist;
  Vec d = Vec::Zero(num_states);
  d[initial_state] = 1.0;
  return d;
}

std::vector<std::string> TabularLowRankMdp::validate() const {
  std::vector<std::string> bad;
  auto fail = [&bad](const std::string& msg) { bad.push_back(msg); };

  if (num_states <= 0 || num_actions <= 0 || horizon <= 0 || rank <= 0) {
    fail("dimensions must be positive");
    return bad;
  }
  if (static_cast<int>(phi.size()) != horizon ||
      static_cast<int>(mu.size()) != horizon ||
      static_cast<int>(reward.size()) != horizon) {
    fail("table horizon mismatch");
    return bad;
  }
  for (int h = 0; h < horizon; ++h) {
    if (phi[h].rows() != num_states * num_actions || phi[h].cols() != rank) {
      fail("phi shape mismatch at step " + std::to_string(h));
      return bad;
    }
    if (mu[h].rows() != rank || mu[h].cols() != num_states) {
      fail("mu shape mismatch at step " + std::to_string(h));
      return bad;
    }
    if (reward[h].rows() != num_states || reward[h].cols() != num_actions) {
      fail("reward shape mismatch at step " + std::to_string(h));
      return bad;
    }
  }
  if (initial_state < 0 || initial_state >= num_states) {
    fail("initial state out of range");
  }
  if (initial_dist.size() > 0) {
    if (initial_dist.size() != num_states) {
      fail("initial distribution has wrong length");
    } else if (initial_dist.minCoeff() < 0.0 ||
               std::abs(initial_dist.sum() - 1.0) > kRowSumTol) {
      fail("initial distribution is not a distribution");
    }
  }

  for (int h = 0; h < horizon; ++h) {
    if (reward[h].hasNaN() || reward[h].minCoeff() < 0.0 ||
        reward[h].maxCoeff() > 1.0) {
      fail("reward outside [0,1] at step " + std::to_string(h));
    }
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        const auto row = phi[h].row(sa(s, a));
        if (row.norm() > 1.0 + kNormSlack) {
          std::ostringstream os;
          os << "feature norm exceeds 1 at (h=" << h << ",s=" << s
             << ",a=" << a << ")";
          fail(os.str());
        }
        const Vec p = mu[h].transpose() * row.transpose();
        double total = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          if (p[i] < -kNegClamp) {
            std::ostringstream os;
            os << "negative transition mass at (h=" << h << ",s=" << s
               << ",a=" << a << ")";
            fail(os.str());
          }
          total += std::max(p[i], 0.0);
        }
        if (std::abs(total - 1.0) > kRowSumTol) {
          std::ostringstream os;
          os << "transition row sums to " << total << " at (h=" << h
             << ",s=" << s << ",a=" << a << ")";
          fail(os.str());
        }
      }
    }
    // Factor battery: the integral of any [0,1]-valued test vector against
    // the factors must have norm at most sqrt(d). Exactness on indicators
    // and the all-ones vector plus 64 seeded uniform draws gives a strong
    // randomized certificate.
    const double bound = std::sqrt(static_cast<double>(rank)) + kNormSlack;
    auto check_g = [&](const Vec& g, const char* what) {
      if ((mu[h] * g).norm() > bound) {
        fail(std::string("factor battery violation (") + what + ") at step " +
             std::to_string(h));
      }
    };
    check_g(Vec::Ones(num_states), "ones");
    for (int sp = 0; sp < num_states; ++sp) {
      check_g(Vec::Unit(num_states, sp), "indicator");
    }
    Rng rng(derive_seed(kBatterySeed, static_cast<std::uint64_t>(h)));
    for (int i = 0; i < kBatteryDraws; ++i) {
      Vec g(num_states);
      for (int sp = 0; sp < num_states; ++sp) g[sp] = rng.uniform();
      check_g(g, "uniform draw");
    }
  }
  return bad;
}

ValueTable evaluate_policy(const TransitionModel& model,
                           const RewardTable& reward,
                           const DeterministicPolicy& policy) {
  check_eval_inputs(model, reward);
  const int S = model.num_states;
  const int H = model.horizon;
  if (static_cast<int>(policy.action.size()) != H) {
    throw std::invalid_argument("policy horizon mismatch");
  }
  ValueTable out;
  out.v.assign(H + 1, Vec::Zero(S));
  out.q.resize(H);
  for (int h = H - 1; h >= 0; --h) {
    if (static_cast<int>(policy.action[h].size()) != S) {
      throw std::invalid_argument("policy state dimension mismatch");
    }
    out.q[h] = step_q(model, reward[h], h, out.v[h + 1]);
    for (int s = 0; s < S; ++s) {
      const int a = policy_action(policy, h, s);
      if (a < 0 || a >= model.num_actions) {
        throw std::invalid_argument("policy action out of range");
      }
      out.v[h][s] = out.q[h](s, a);
    }
  }
  return out;
}

ValueTable evaluate_policy(const TransitionModel& model,
                           const RewardTable& reward,
                           const StochasticPolicy& policy) {
  check_eval_inputs(model, reward);
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  if (static_cast<int>(policy.prob.size()) != H) {
    throw std::invalid_argument("policy horizon mismatch");
  }
  ValueTable out;
  out.v.assign(H + 1, Vec::Zero(S));
  out.q.resize(H);
  for (int h = H - 1; h >= 0; --h) {
    if (policy.prob[h].rows() != S || policy.prob[h].cols() != K) {
      throw std::invalid_argument("policy shape mismatch");
    }
    out.q[h] = step_q(model, reward[h], h, out.v[h + 1]);
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < K; ++a) v += policy.prob[h](s, a) * out.q[h](s, a);
      out.v[h][s] = v;
    }
  }
  return out;
}

PlanResult optimal_plan(const TransitionModel& model,
                        const RewardTable& reward) {
  check_eval_inputs(model, reward);
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  PlanResult out;
  out.policy.action.assign(H, std::vector<int>(S, 0));
  out.values.v.assign(H + 1, Vec::Zero(S));
  out.values.q.resize(H);
  for (int h = H - 1; h >= 0; --h) {
    out.values.q[h] = step_q(model, reward[h], h, out.values.v[h + 1]);
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = out.values.q[h](s, 0);
      for (int a = 1; a < K; ++a) {
        if (out.values.q[h](s, a) > best_q) {
          best_q = out.values.q[h](s, a);
          best = a;
        }
      }
      out.policy.action[h][s] = best;
      out.values.v[h][s] = best_q;
    }
  }
  return out;
}

ValueTable truncated_optimal_values(const TransitionModel& model,
                                    const RewardTable& reward, double cap) {
  check_eval_inputs(model, reward);
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  ValueTable out;
  out.v.assign(H + 1, Vec::Zero(S));
  out.q.resize(H);
  for (int h = H - 1; h >= 0; --h) {
    out.q[h] = step_q(model, reward[h], h, out.v[h + 1]);
    for (int s = 0; s < S; ++s) {
      double best_q = out.q[h](s, 0);
      for (int a = 1; a < K; ++a) best_q = std::max(best_q, out.q[h](s, a));
      out.v[h][s] = std::min(best_q, cap);
    }
  }
  return out;
}

namespace {

template <typename Policy>
std::vector<Mat> occupancy_impl(const TransitionModel& model,
                                const Policy& policy, const Vec& initial) {
  const int S = model.num_states;
  const int K = model.num_actions;
  const int H = model.horizon;
  if (initial.size() != S) {
    throw std::invalid_argument("initial distribution has wrong length");
  }
  std::vector<Mat> occ(H, Mat::Zero(S, K));
  Vec state_dist = initial;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      if (state_dist[s] == 0.0) continue;
      if constexpr (std::is_same_v<Policy, DeterministicPolicy>) {
        occ[h](s, policy.action[h][s]) = state_dist[s];
      } else {
        for (int a = 0; a < K; ++a) {
          occ[h](s, a) = state_dist[s] * policy.prob[h](s, a);
        }
      }
    }
    if (h + 1 < H) {
      Vec next = Vec::Zero(S);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < K; ++a) {
          const double w = occ[h](s, a);
          if (w == 0.0) continue;
          next += w * model.p[h].row(model.sa(s, a)).transpose();
        }
      }
      state_dist = next;
    }
  }
  return occ;
}

template <typename Policy>
Trajectory sample_impl(const TabularLowRankMdp& env, const Policy& policy,
                       Rng& rng) {
  Trajectory traj;
  traj.reserve(env.horizon);
  int s = env.initial_state;
  if (env.initial_dist.size() > 0) s = rng.categorical(env.initial_dist);
  for (int h = 0; h < env.horizon; ++h) {
    int a;
    if constexpr (std::is_same_v<Policy, DeterministicPolicy>) {
      a = policy.action[h][s];
    } else {
      a = rng.categorical(policy.prob[h].row(s).transpose());
    }
    const Vec p = env.transition_distribution(h, s, a);
    const int sp = rng.categorical(p);
    traj.push_back(Step{h, s, a, env.reward[h](s, a), sp});
    s = sp;
  }
  return traj;
}

}  // namespace

std::vector<Mat> occupancy_measures(const TransitionModel& model,
                                    const DeterministicPolicy& policy,
                                    const Vec& initial) {
  return occupancy_impl(model, policy, initial);
}

std::vector<Mat> occupancy_measures(const TransitionModel& model,
                                    const StochasticPolicy& policy,
                                    const Vec& initial) {
  return occupancy_impl(model, policy, initial);
}

Trajectory sample_episode(const TabularLowRankMdp& env,
                          const DeterministicPolicy& policy, Rng& rng) {
  return sample_impl(env, policy, rng);
}

Trajectory sample_episode(const TabularLowRankMdp& env,
                          const StochasticPolicy& policy, Rng& rng) {
  return sample_impl(env, policy, rng);
}

double tv_distance(const Eigen::Ref<const Vec>& p,
                   const Eigen::Ref<const Vec>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("tv_distance: length mismatch");
  }
  return 0.5 * (p - q).lpNorm<1>();
}

double initial_value(const ValueTable& values, const Vec& initial) {
  if (values.v.empty() || values.v[0].size() != initial.size()) {
    throw std::invalid_argument("initial_value: shape mismatch");
  }
  return values.v[0].dot(initial);
}

SimulationLemmaSides simulation_lemma_sides(const TransitionModel& p1,
                                            const RewardTable& r1,
                                            const TransitionModel& p2,
                                            const RewardTable& r2,
                                            const StochasticPolicy& policy,
                                            const Vec& initial) {
  if (p1.num_states != p2.num_states || p1.num_actions != p2.num_actions ||
      p1.horizon != p2.horizon) {
    throw std::invalid_argument("simulation lemma: model shape mismatch");
  }
  const ValueTable v1 = evaluate_policy(p1, r1, policy);
  const ValueTable v2 = evaluate_policy(p2, r2, policy);
  const std::vector<Mat> occ1 = occupancy_measures(p1, policy, initial);
  const std::vector<Mat> occ2 = occupancy_measures(p2, policy, initial);

  SimulationLemmaSides out;
  out.lhs = initial_value(v1, initial) - initial_value(v2, initial);

  const int S = p1.num_states;
  const int K = p1.num_actions;
  for (int h = 0; h < p1.horizon; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < K; ++a) {
        const int idx = p1.sa(s, a);
        const double dr = r1[h](s, a) - r2[h](s, a);
        const Vec dp = (p1.p[h].row(idx) - p2.p[h].row(idx)).transpose();
        if (occ2[h](s, a) != 0.0) {
          out.rhs_under_p2 += occ2[h](s, a) * (dr + dp.dot(v1.v[h + 1]));
        }
        if (occ1[h](s, a) != 0.0) {
          out.rhs_under_p1 += occ1[h](s, a) * (dr + dp.dot(v2.v[h + 1]));
        }
      }
    }
  }
  return out;
}

}  // namespace morl
