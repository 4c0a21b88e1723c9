#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morl/data.hpp"
#include "morl/mdp.hpp"
#include "morl/model_class.hpp"
#include "morl/rfe.hpp"

namespace morl {

// Versioned JSON documents (schema version 1). Numbers round-trip exactly:
// doubles are emitted with enough digits to reparse to the same bits.

std::string to_json(const TabularLowRankMdp& mdp);
TabularLowRankMdp mdp_from_json(const std::string& text);

std::string to_json(const DeterministicPolicy& policy);
DeterministicPolicy deterministic_policy_from_json(const std::string& text);

std::string to_json(const StochasticPolicy& policy);
StochasticPolicy stochastic_policy_from_json(const std::string& text);

std::string to_json(const OfflineDataset& data);
OfflineDataset dataset_from_json(const std::string& text);

std::string to_json(const RfeDataset& data);

// Learned model: selection indices, loglik, and the stitched tables.
std::string to_json(const LearnedModel& model);

std::string to_json(const RewardTable& reward);
RewardTable reward_table_from_json(const std::string& text);

// Manifest tying a generated family to its artifact files and seed.
struct FamilyManifest {
  std::uint64_t seed = 0;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int rank = 0;
  std::vector<std::string> task_files;
  std::vector<std::string> policy_files;
  std::string target_file;
  std::string dataset_file;
};
std::string to_json(const FamilyManifest& manifest);
FamilyManifest manifest_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace morl
