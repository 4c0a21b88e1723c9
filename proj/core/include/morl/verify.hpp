#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace morl {

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  // One line per check, "PASS name (observed vs limit)" style.
  std::string render() const;
};

// Structural identities on fixed small instances: policy evaluation against
// closed forms, simulation-lemma equality on both expansions, occupancy and
// value duality, covariance and penalty identities, elliptical potential.
// Runs in well under a second.
VerifyReport verify_fast(std::uint64_t seed);

// Sampled checks: empirical transition frequencies against model rows,
// Monte Carlo returns against exact policy evaluation, MLE truth recovery
// at moderate sample size. Slower, still seconds.
VerifyReport verify_statistical(std::uint64_t seed);

// Parses a serialized environment file and re-validates every structural
// invariant. Returns a report with one check per invariant group.
VerifyReport validate_mdp_file(const std::string& path);

}  // namespace morl
