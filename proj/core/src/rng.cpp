#include "morl/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace morl {

namespace {

// splitmix64 finalizer; a solid 64-bit mixer for seed derivation.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = mix(base);
  s = mix(s ^ mix(a + 0x100000001ULL));
  s = mix(s ^ mix(b + 0x200000002ULL));
  s = mix(s ^ mix(c + 0x300000003ULL));
  return s;
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % un;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], keeping the log argument positive.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

int Rng::categorical(const Eigen::Ref<const Eigen::VectorXd>& p) {
  const double u = uniform();
  double acc = 0.0;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding can leave acc marginally below 1; fall back to the last
  // index with positive mass.
  for (int i = n - 1; i >= 0; --i) {
    if (p[i] > 0.0) return i;
  }
  throw std::invalid_argument("categorical: probability vector has no mass");
}

Eigen::VectorXd Rng::simplex(int n) {
  if (n <= 0) throw std::invalid_argument("simplex: n must be positive");
  Eigen::VectorXd v(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = -std::log(1.0 - uniform());
    total += v[i];
  }
  v /= total;
  return v;
}

}  // namespace morl
