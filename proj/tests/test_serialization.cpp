#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <string>

#include "json.hpp"

#include "morl/fixtures.hpp"
#include "morl/generators.hpp"
#include "morl/serialization.hpp"
#include "test_support.hpp"

using namespace morl;

TEST_CASE("environment json reparses to the same text") {
  const TaskFamily family = test_support::seed0_family();
  const std::string once = to_json(family.tasks[1]);
  const TabularLowRankMdp back = mdp_from_json(once);
  CHECK(to_json(back) == once);
  CHECK(back.num_states == 5);
  CHECK(back.num_actions == 2);
  CHECK(back.horizon == 3);
  CHECK(back.rank == 2);
}

TEST_CASE("awkward doubles survive the round trip bit for bit") {
  TabularLowRankMdp mdp = fixtures::identity_chain(2, 1, 1);
  mdp.phi[0](0, 0) = 0.1 + 0.2;  // 0.30000000000000004
  mdp.phi[0](0, 1) = 1.0 - (0.1 + 0.2);
  mdp.mu[0](0, 0) = 1.0 / 3.0;
  mdp.mu[0](0, 1) = 1.0 - 1.0 / 3.0;
  mdp.reward[0](0, 0) = 1e-17;
  const TabularLowRankMdp back = mdp_from_json(to_json(mdp));
  CHECK(back.phi[0](0, 0) == 0.1 + 0.2);
  CHECK(back.phi[0](0, 1) == 1.0 - (0.1 + 0.2));
  CHECK(back.mu[0](0, 0) == 1.0 / 3.0);
  CHECK(back.mu[0](0, 1) == 1.0 - 1.0 / 3.0);
  CHECK(back.reward[0](0, 0) == 1e-17);
}

TEST_CASE("documents carry the expected keys and version") {
  const TaskFamily family = test_support::seed0_family();
  const auto doc = nlohmann::json::parse(to_json(family.tasks[0]));
  CHECK(doc.at("version").get<int>() == 1);
  for (const char* key : {"S", "K", "H", "d", "phi", "mu", "reward", "s1"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc.at("S").get<int>() == 5);
  CHECK(doc.at("K").get<int>() == 2);
  CHECK(doc.at("H").get<int>() == 3);
  CHECK(doc.at("d").get<int>() == 2);
  CHECK(doc.at("s1").get<int>() == family.tasks[0].initial_state);
  CHECK(doc.at("phi").size() == 3);
  CHECK(doc.at("mu").size() == 3);
}

TEST_CASE("an unknown schema version is rejected") {
  const TaskFamily family = test_support::seed0_family();
  auto doc = nlohmann::json::parse(to_json(family.tasks[0]));
  doc["version"] = 2;
  CHECK_THROWS(mdp_from_json(doc.dump()));
  doc.erase("version");
  CHECK_THROWS(mdp_from_json(doc.dump()));
}

TEST_CASE("an explicit initial distribution round-trips") {
  TabularLowRankMdp mdp = fixtures::identity_chain(3, 2, 2);
  mdp.initial_dist = Vec::Zero(3);
  mdp.initial_dist << 0.5, 0.25, 0.25;
  const std::string once = to_json(mdp);
  const TabularLowRankMdp back = mdp_from_json(once);
  REQUIRE(back.initial_dist.size() == 3);
  CHECK(back.initial_dist(0) == 0.5);
  CHECK(back.initial_dist(1) == 0.25);
  CHECK(back.initial_dist(2) == 0.25);
  CHECK(to_json(back) == once);

  // A point-mass environment stays compact: no distribution key at all.
  const auto doc =
      nlohmann::json::parse(to_json(fixtures::identity_chain(3, 2, 2)));
  CHECK(!doc.contains("init_dist"));
}

TEST_CASE("policies round-trip exactly") {
  Rng rng(derive_seed(31, stream::misc, 0));
  const DeterministicPolicy det =
      test_support::random_deterministic_policy(5, 3, 4, rng);
  const std::string det_text = to_json(det);
  const DeterministicPolicy det_back =
      deterministic_policy_from_json(det_text);
  CHECK(det_back.action == det.action);
  CHECK(to_json(det_back) == det_text);

  const StochasticPolicy sto = test_support::random_policy(5, 3, 4, rng);
  const std::string sto_text = to_json(sto);
  const StochasticPolicy sto_back = stochastic_policy_from_json(sto_text);
  REQUIRE(sto_back.prob.size() == sto.prob.size());
  for (size_t h = 0; h < sto.prob.size(); ++h) {
    CHECK((sto_back.prob[h].array() == sto.prob[h].array()).all());
  }
  CHECK(to_json(sto_back) == sto_text);
}

TEST_CASE("datasets round-trip with counts intact") {
  const TaskFamily family = test_support::seed0_family();
  const auto behaviors = test_support::family_behaviors(family, 0.25, 33);
  const OfflineDataset data =
      test_support::collect_dataset(family, behaviors, 25, 33);
  const std::string text = to_json(data);
  const OfflineDataset back = dataset_from_json(text);
  CHECK(to_json(back) == text);
  CHECK(back.num_tasks == data.num_tasks);
  CHECK(back.episodes == data.episodes);
  for (int t = 0; t < data.num_tasks; ++t) {
    for (int h = 0; h < data.horizon; ++h) {
      CHECK((back.counts(t, h).array() == data.counts(t, h).array()).all());
      REQUIRE(back.tuples[t][h].size() == data.tuples[t][h].size());
      for (size_t i = 0; i < data.tuples[t][h].size(); ++i) {
        CHECK(back.tuples[t][h][i].state == data.tuples[t][h][i].state);
        CHECK(back.tuples[t][h][i].action == data.tuples[t][h][i].action);
        CHECK(back.tuples[t][h][i].reward == data.tuples[t][h][i].reward);
        CHECK(back.tuples[t][h][i].next_state ==
              data.tuples[t][h][i].next_state);
      }
    }
  }
}

TEST_CASE("reward tables round-trip exactly") {
  Rng rng(derive_seed(34, stream::reward, 0));
  const RewardTable reward = test_support::random_reward(4, 3, 2, rng);
  const std::string text = to_json(reward);
  const RewardTable back = reward_table_from_json(text);
  REQUIRE(back.size() == reward.size());
  for (size_t h = 0; h < reward.size(); ++h) {
    CHECK((back[h].array() == reward[h].array()).all());
  }
  CHECK(to_json(back) == text);
}

TEST_CASE("manifests round-trip exactly") {
  FamilyManifest manifest;
  manifest.seed = 0xDEADBEEFCAFEF00Dull;
  manifest.num_states = 5;
  manifest.num_actions = 2;
  manifest.horizon = 3;
  manifest.rank = 2;
  manifest.task_files = {"task_0.json", "task_1.json"};
  manifest.policy_files = {"behavior_0.json", "behavior_1.json"};
  manifest.target_file = "target.json";
  manifest.dataset_file = "dataset.json";
  const std::string text = to_json(manifest);
  const FamilyManifest back = manifest_from_json(text);
  CHECK(back.seed == manifest.seed);
  CHECK(back.task_files == manifest.task_files);
  CHECK(back.policy_files == manifest.policy_files);
  CHECK(back.target_file == manifest.target_file);
  CHECK(back.dataset_file == manifest.dataset_file);
  CHECK(to_json(back) == text);
}

TEST_CASE("learned models and exploration logs serialize cleanly") {
  const TaskFamily family = test_support::seed0_family();
  Rng class_rng(derive_seed(35, stream::model_class, 0));
  const ModelClass mc = gen_model_class(family, 2, 2, 0.2, class_rng);
  const auto behaviors = test_support::family_behaviors(family, 0.25, 35);
  const OfflineDataset data =
      test_support::collect_dataset(family, behaviors, 60, 35);
  const LearnedModel model = fit_model(mc, data);
  const auto doc = nlohmann::json::parse(to_json(model));
  CHECK(doc.at("version").get<int>() == 1);
  CHECK(doc.contains("phi_index"));
  CHECK(doc.contains("mu_index"));
  CHECK(doc.contains("loglik"));

  RfeConfig config;
  config.episodes = 5;
  config.beta = 1.0;
  Rng rng(derive_seed(35, stream::rfe, 0));
  const RfeExploreResult explored =
      rfe_explore(family.tasks[0], family.shared_phi(), config, rng);
  const auto rfe_doc = nlohmann::json::parse(to_json(explored.data));
  CHECK(rfe_doc.at("version").get<int>() == 1);
  CHECK(rfe_doc.at("episodes").get<int>() == 5);
}

TEST_CASE("text files write and read back verbatim") {
  const std::string path = "serialization_test_scratch.json";
  const std::string text = "{\"version\":1,\n\"payload\":[1,2,3]}\n";
  write_text_file(path, text);
  CHECK(read_text_file(path) == text);
  std::remove(path.c_str());
  CHECK_THROWS(read_text_file(path));
}
