#include "morl/model_class.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace morl {
namespace {

constexpr double kProbFloor = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Count triples (sa, s', count) for one (task, step) cell; iterating these
// instead of the dense histogram keeps likelihood sums proportional to the
// number of distinct observed transitions.
struct SparseCounts {
  std::vector<int> row;
  std::vector<int> col;
  std::vector<double> weight;
};

SparseCounts sparsify(const Mat& counts) {
  SparseCounts out;
  for (int r = 0; r < counts.rows(); ++r) {
    for (int c = 0; c < counts.cols(); ++c) {
      if (counts(r, c) > 0.0) {
        out.row.push_back(r);
        out.col.push_back(c);
        out.weight.push_back(counts(r, c));
      }
    }
  }
  return out;
}

double sparse_log_likelihood(const Mat& kernel, const SparseCounts& counts) {
  double total = 0.0;
  for (std::size_t i = 0; i < counts.row.size(); ++i) {
    const double p = kernel(counts.row[i], counts.col[i]);
    if (p <= kProbFloor) return kNegInf;
    total += counts.weight[i] * std::log(p);
  }
  return total;
}

}  // namespace

std::vector<std::string> validate_class(const ModelClass& model_class) {
  std::vector<std::string> issues;
  for (int i = 0; i < model_class.size_phi(); ++i) {
    for (int j = 0; j < model_class.size_psi(); ++j) {
      TabularLowRankMdp candidate;
      candidate.num_states = model_class.num_states;
      candidate.num_actions = model_class.num_actions;
      candidate.horizon = model_class.horizon;
      candidate.rank = model_class.rank;
      candidate.phi = model_class.phis[i];
      candidate.mu = model_class.psis[j];
      candidate.reward.assign(
          model_class.horizon,
          Mat::Zero(model_class.num_states, model_class.num_actions));
      for (const std::string& msg : candidate.validate()) {
        issues.push_back("pair (phi " + std::to_string(i) + ", psi " +
                         std::to_string(j) + "): " + msg);
      }
    }
  }
  return issues;
}

double joint_log_likelihood(const Mat& phi_h,
                            const std::vector<const Mat*>& mu_h_per_task,
                            const OfflineDataset& data, int h) {
  if (h < 0 || h >= data.horizon) throw std::out_of_range("step out of range");
  if (static_cast<int>(mu_h_per_task.size()) != data.num_tasks) {
    throw std::invalid_argument("one factor candidate per task required");
  }
  double total = 0.0;
  for (int t = 0; t < data.num_tasks; ++t) {
    const Mat kernel = phi_h * (*mu_h_per_task[t]);
    const double ll = sparse_log_likelihood(kernel, sparsify(data.counts(t, h)));
    if (ll == kNegInf) return kNegInf;
    total += ll;
  }
  return total;
}

MleSelection mle_fit(const ModelClass& model_class, const OfflineDataset& data,
                     int h) {
  if (h < 0 || h >= data.horizon) throw std::out_of_range("step out of range");
  if (data.num_states != model_class.num_states ||
      data.num_actions != model_class.num_actions ||
      data.horizon != model_class.horizon) {
    throw std::invalid_argument("dataset and model class shapes differ");
  }
  const int T = data.num_tasks;
  const int P = model_class.size_phi();
  const int Q = model_class.size_psi();
  if (P < 1 || Q < 1) throw std::invalid_argument("empty model class");

  std::vector<SparseCounts> counts(T);
  for (int t = 0; t < T; ++t) counts[t] = sparsify(data.counts(t, h));

  MleSelection best;
  double best_total = kNegInf;
  bool found = false;
  for (int i = 0; i < P; ++i) {
    // For a fixed feature candidate the joint objective separates across
    // tasks, so each task picks its factor independently.
    std::vector<int> pick(T, 0);
    std::vector<double> pick_ll(T, kNegInf);
    for (int j = 0; j < Q; ++j) {
      const Mat kernel = model_class.phis[i][h] * model_class.psis[j][h];
      for (int t = 0; t < T; ++t) {
        const double ll = sparse_log_likelihood(kernel, counts[t]);
        if (ll > pick_ll[t]) {
          pick_ll[t] = ll;
          pick[t] = j;
        }
      }
    }
    double total = 0.0;
    for (int t = 0; t < T; ++t) total += pick_ll[t];
    if (!std::isfinite(total)) continue;
    if (!found || total > best_total) {
      best_total = total;
      best.phi_index = i;
      best.mu_indices = pick;
      best.loglik = total;
      found = true;
    }
  }
  if (!found) {
    throw std::runtime_error(
        "every feature candidate assigns zero probability to observed data");
  }
  return best;
}

LearnedModel reconstruct_kernels(const ModelClass& model_class,
                                 const std::vector<MleSelection>& per_h) {
  const int H = model_class.horizon;
  if (static_cast<int>(per_h.size()) != H) {
    throw std::invalid_argument("one selection per step required");
  }
  const int T = per_h.empty() ? 0 : static_cast<int>(per_h[0].mu_indices.size());
  LearnedModel model;
  model.phi_index.resize(H);
  model.mu_index.assign(T, std::vector<int>(H, 0));
  model.phi_hat.resize(H);
  model.mu_hat.assign(T, FactorTable(H));
  model.loglik = 0.0;
  for (int h = 0; h < H; ++h) {
    const MleSelection& sel = per_h[h];
    if (static_cast<int>(sel.mu_indices.size()) != T) {
      throw std::invalid_argument("task count differs across steps");
    }
    model.phi_index[h] = sel.phi_index;
    model.phi_hat[h] = model_class.phis.at(sel.phi_index)[h];
    for (int t = 0; t < T; ++t) {
      model.mu_index[t][h] = sel.mu_indices[t];
      model.mu_hat[t][h] = model_class.psis.at(sel.mu_indices[t])[h];
    }
    model.loglik += sel.loglik;
  }
  model.p_hat.resize(T);
  for (int t = 0; t < T; ++t) {
    TransitionModel& p = model.p_hat[t];
    p.num_states = model_class.num_states;
    p.num_actions = model_class.num_actions;
    p.horizon = H;
    p.p.resize(H);
    for (int h = 0; h < H; ++h) p.p[h] = model.phi_hat[h] * model.mu_hat[t][h];
  }
  return model;
}

LearnedModel fit_model(const ModelClass& model_class,
                       const OfflineDataset& data) {
  std::vector<MleSelection> per_h;
  per_h.reserve(data.horizon);
  for (int h = 0; h < data.horizon; ++h) {
    per_h.push_back(mle_fit(model_class, data, h));
  }
  return reconstruct_kernels(model_class, per_h);
}

}  // namespace morl
