#include "morl/fixtures.hpp"

namespace morl {
namespace fixtures {

namespace {

TabularLowRankMdp base(int S, int K, int H, int d) {
  TabularLowRankMdp m;
  m.num_states = S;
  m.num_actions = K;
  m.horizon = H;
  m.rank = d;
  m.initial_state = 0;
  m.phi.assign(H, Mat::Zero(S * K, d));
  m.mu.assign(H, Mat::Zero(d, S));
  m.reward.assign(H, Mat::Zero(S, K));
  return m;
}

}  // namespace

TabularLowRankMdp identity_chain(int S, int K, int H) {
  TabularLowRankMdp m = base(S, K, H, S);
  for (int h = 0; h < H; ++h) {
    m.mu[h] = Mat::Identity(S, S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < K; ++a) m.phi[h](m.sa(s, a), s) = 1.0;
    }
  }
  return m;
}

TabularLowRankMdp uniform_mdp(int S, int K, int H) {
  TabularLowRankMdp m = base(S, K, H, 1);
  for (int h = 0; h < H; ++h) {
    m.phi[h].setOnes();
    m.mu[h].setConstant(1.0 / S);
  }
  return m;
}

TabularLowRankMdp deterministic_goto(int S, int K, int H, Rng& rng) {
  TabularLowRankMdp m = base(S, K, H, S);
  for (int h = 0; h < H; ++h) {
    m.mu[h] = Mat::Identity(S, S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < K; ++a) {
        m.phi[h](m.sa(s, a), rng.uniform_int(S)) = 1.0;
        m.reward[h](s, a) = rng.uniform();
      }
    }
  }
  return m;
}

}  // namespace fixtures
}  // namespace morl
