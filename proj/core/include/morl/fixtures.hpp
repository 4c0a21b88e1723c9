#pragma once

#include "morl/mdp.hpp"

namespace morl {
namespace fixtures {

// Every action keeps the state fixed: phi_h(s,a) = e_s, mu_h = identity,
// so P(s'|s,a) = [s' = s]. Rank equals the state count. Rewards default to
// zero; pass a table to override.
TabularLowRankMdp identity_chain(int num_states, int num_actions, int horizon);

// Rank-one MDP whose kernel is uniform over states for every (h, s, a).
TabularLowRankMdp uniform_mdp(int num_states, int num_actions, int horizon);

// Deterministic MDP with next(s,a) drawn uniformly and rewards drawn
// uniformly in [0,1]: phi_h(s,a) = e_{next(s,a)}, mu_h = identity.
TabularLowRankMdp deterministic_goto(int num_states, int num_actions,
                                     int horizon, Rng& rng);

}  // namespace fixtures
}  // namespace morl
