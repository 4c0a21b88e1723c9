#include "morl/serialization.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace morl {
namespace {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const Json& j, int expect_rows, int expect_cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != expect_rows) {
    throw std::invalid_argument("matrix row count mismatch");
  }
  Mat m(expect_rows, expect_cols);
  for (int i = 0; i < expect_rows; ++i) {
    const Json& row = j.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != expect_cols) {
      throw std::invalid_argument("matrix column count mismatch");
    }
    for (int c = 0; c < expect_cols; ++c) m(i, c) = row.at(c).get<double>();
  }
  return m;
}

Json table_to_json(const std::vector<Mat>& table) {
  Json out = Json::array();
  for (const Mat& m : table) out.push_back(matrix_to_json(m));
  return out;
}

std::vector<Mat> table_from_json(const Json& j, int horizon, int rows,
                                 int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != horizon) {
    throw std::invalid_argument("table horizon mismatch");
  }
  std::vector<Mat> table(horizon);
  for (int h = 0; h < horizon; ++h) {
    table[h] = matrix_from_json(j.at(h), rows, cols);
  }
  return table;
}

Json parse_versioned(const std::string& text) {
  Json j = Json::parse(text);
  if (!j.is_object() || !j.contains("version") ||
      j.at("version").get<int>() != 1) {
    throw std::invalid_argument("unsupported document version");
  }
  return j;
}

}  // namespace

std::string to_json(const TabularLowRankMdp& mdp) {
  Json j;
  j["version"] = 1;
  j["S"] = mdp.num_states;
  j["K"] = mdp.num_actions;
  j["H"] = mdp.horizon;
  j["d"] = mdp.rank;
  j["phi"] = table_to_json(mdp.phi);
  j["mu"] = table_to_json(mdp.mu);
  j["reward"] = table_to_json(mdp.reward);
  j["s1"] = mdp.initial_state;
  if (mdp.initial_dist.size() > 0) {
    Json dist = Json::array();
    for (int s = 0; s < mdp.initial_dist.size(); ++s) {
      dist.push_back(mdp.initial_dist(s));
    }
    j["init_dist"] = std::move(dist);
  }
  return j.dump();
}

TabularLowRankMdp mdp_from_json(const std::string& text) {
  const Json j = parse_versioned(text);
  TabularLowRankMdp mdp;
  mdp.num_states = j.at("S").get<int>();
  mdp.num_actions = j.at("K").get<int>();
  mdp.horizon = j.at("H").get<int>();
  mdp.rank = j.at("d").get<int>();
  mdp.initial_state = j.at("s1").get<int>();
  mdp.phi = table_from_json(j.at("phi"), mdp.horizon,
                            mdp.num_states * mdp.num_actions, mdp.rank);
  mdp.mu = table_from_json(j.at("mu"), mdp.horizon, mdp.rank, mdp.num_states);
  mdp.reward = table_from_json(j.at("reward"), mdp.horizon, mdp.num_states,
                               mdp.num_actions);
  if (j.contains("init_dist")) {
    const Json& dist = j.at("init_dist");
    mdp.initial_dist = Vec(dist.size());
    for (std::size_t s = 0; s < dist.size(); ++s) {
      mdp.initial_dist(static_cast<int>(s)) = dist.at(s).get<double>();
    }
  }
  return mdp;
}

std::string to_json(const DeterministicPolicy& policy) {
  Json j;
  j["version"] = 1;
  j["H"] = policy.action.size();
  j["S"] = policy.action.empty() ? 0 : policy.action[0].size();
  j["action"] = policy.action;
  return j.dump();
}

DeterministicPolicy deterministic_policy_from_json(const std::string& text) {
  const Json j = parse_versioned(text);
  DeterministicPolicy policy;
  policy.action = j.at("action").get<std::vector<std::vector<int>>>();
  return policy;
}

std::string to_json(const StochasticPolicy& policy) {
  Json j;
  j["version"] = 1;
  j["H"] = policy.prob.size();
  j["S"] = policy.prob.empty() ? 0 : policy.prob[0].rows();
  j["K"] = policy.prob.empty() ? 0 : policy.prob[0].cols();
  j["prob"] = table_to_json(policy.prob);
  return j.dump();
}

StochasticPolicy stochastic_policy_from_json(const std::string& text) {
  const Json j = parse_versioned(text);
  const int H = j.at("H").get<int>();
  const int S = j.at("S").get<int>();
  const int K = j.at("K").get<int>();
  StochasticPolicy policy;
  policy.prob = table_from_json(j.at("prob"), H, S, K);
  return policy;
}

std::string to_json(const OfflineDataset& data) {
  Json j;
  j["version"] = 1;
  j["T"] = data.num_tasks;
  j["H"] = data.horizon;
  j["S"] = data.num_states;
  j["K"] = data.num_actions;
  j["episodes"] = data.episodes;
  Json tasks = Json::array();
  for (int t = 0; t < data.num_tasks; ++t) {
    Json steps = Json::array();
    for (int h = 0; h < data.horizon; ++h) {
      Json tuples = Json::array();
      for (const Transition& tr : data.tuples[t][h]) {
        tuples.push_back(
            Json::array({tr.state, tr.action, tr.reward, tr.next_state}));
      }
      steps.push_back(std::move(tuples));
    }
    tasks.push_back(std::move(steps));
  }
  j["tuples"] = std::move(tasks);
  return j.dump();
}

OfflineDataset dataset_from_json(const std::string& text) {
  const Json j = parse_versioned(text);
  OfflineDataset data = OfflineDataset::empty(
      j.at("T").get<int>(), j.at("H").get<int>(), j.at("S").get<int>(),
      j.at("K").get<int>());
  const Json& tasks = j.at("tuples");
  for (int t = 0; t < data.num_tasks; ++t) {
    const Json& steps = tasks.at(t);
    for (int h = 0; h < data.horizon; ++h) {
      for (const Json& tuple : steps.at(h)) {
        data.tuples[t][h].push_back({tuple.at(0).get<int>(),
                                     tuple.at(1).get<int>(),
                                     tuple.at(2).get<double>(),
                                     tuple.at(3).get<int>()});
      }
    }
  }
  data.rebuild_counts();
  return data;
}

std::string to_json(const RfeDataset& data) {
  Json j;
  j["version"] = 1;
  j["episodes"] = data.episodes;
  j["H"] = data.horizon;
  j["S"] = data.num_states;
  j["K"] = data.num_actions;
  Json episodes = Json::array();
  for (const std::vector<RfeTransition>& episode : data.tuples) {
    Json steps = Json::array();
    for (const RfeTransition& tr : episode) {
      steps.push_back(Json::array({tr.state, tr.action, tr.next_state}));
    }
    episodes.push_back(std::move(steps));
  }
  j["tuples"] = std::move(episodes);
  return j.dump();
}

std::string to_json(const LearnedModel& model) {
  Json j;
  j["version"] = 1;
  j["H"] = model.phi_index.size();
  j["T"] = model.num_tasks();
  j["phi_index"] = model.phi_index;
  j["mu_index"] = model.mu_index;
  j["loglik"] = model.loglik;
  j["phi_hat"] = table_to_json(model.phi_hat);
  Json factors = Json::array();
  for (const FactorTable& mu : model.mu_hat) {
    factors.push_back(table_to_json(mu));
  }
  j["mu_hat"] = std::move(factors);
  return j.dump();
}

std::string to_json(const RewardTable& reward) {
  Json j;
  j["version"] = 1;
  j["H"] = reward.size();
  j["S"] = reward.empty() ? 0 : reward[0].rows();
  j["K"] = reward.empty() ? 0 : reward[0].cols();
  j["reward"] = table_to_json(reward);
  return j.dump();
}

RewardTable reward_table_from_json(const std::string& text) {
  const Json j = parse_versioned(text);
  return table_from_json(j.at("reward"), j.at("H").get<int>(),
                         j.at("S").get<int>(), j.at("K").get<int>());
}

std::string to_json(const FamilyManifest& manifest) {
  Json j;
  j["version"] = 1;
  j["seed"] = manifest.seed;
  j["S"] = manifest.num_states;
  j["K"] = manifest.num_actions;
  j["H"] = manifest.horizon;
  j["d"] = manifest.rank;
  j["task_files"] = manifest.task_files;
  j["policy_files"] = manifest.policy_files;
  j["target_file"] = manifest.target_file;
  j["dataset_file"] = manifest.dataset_file;
  return j.dump(2);
}

FamilyManifest manifest_from_json(const std::string& text) {
  const Json j = parse_versioned(text);
  FamilyManifest manifest;
  manifest.seed = j.at("seed").get<std::uint64_t>();
  manifest.num_states = j.at("S").get<int>();
  manifest.num_actions = j.at("K").get<int>();
  manifest.horizon = j.at("H").get<int>();
  manifest.rank = j.at("d").get<int>();
  manifest.task_files = j.at("task_files").get<std::vector<std::string>>();
  manifest.policy_files = j.at("policy_files").get<std::vector<std::string>>();
  manifest.target_file = j.at("target_file").get<std::string>();
  manifest.dataset_file = j.at("dataset_file").get<std::string>();
  return manifest;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace morl
