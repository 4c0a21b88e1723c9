#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace morl {

// Derives a child seed from a base seed and up to three stream labels.
// Used to split one master seed into independent per-component streams so
// that adding or reordering experiments never perturbs the draws of another.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// Stream labels for derive_seed. Values are arbitrary but frozen: changing
// them changes every seeded artifact.
namespace stream {
inline constexpr std::uint64_t family = 1;
inline constexpr std::uint64_t behavior = 2;
inline constexpr std::uint64_t dataset = 3;
inline constexpr std::uint64_t model_class = 4;
inline constexpr std::uint64_t target = 5;
inline constexpr std::uint64_t reward = 6;
inline constexpr std::uint64_t rfe = 7;
inline constexpr std::uint64_t online = 8;
inline constexpr std::uint64_t misc = 9;
}  // namespace stream

// Deterministic random stream. All floating-point draws are produced from
// raw 64-bit engine output with fixed arithmetic, so a given seed yields the
// same sequence on every platform this library builds on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free for our n << 2^64 use;
  // modulo bias at n <= 2^32 is below 2^-32 and irrelevant here, but we
  // still reject to keep the stream unbiased.
  int uniform_int(int n);

  // Standard normal via Box-Muller on the uniform stream.
  double normal();

  // Index sampled from an explicit probability vector (assumed to sum to 1).
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& p);

  // Uniform draw from the (n-1)-simplex via normalized exponentials.
  Eigen::VectorXd simplex(int n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace morl
