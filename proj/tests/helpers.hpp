#pragma once

#include "mdpopt/instances.hpp"
#include "mdpopt/rng.hpp"
#include "mdpopt/types.hpp"

namespace mdpopt::testing {

inline Dmdp random_mdp(int num_states, int num_actions, double gamma,
                       std::uint64_t seed) {
  return generate(InstanceSpec::random(num_states, num_actions, 1.0, gamma,
                                       seed));
}

inline Policy random_interior_policy(int num_states, int num_actions,
                                     std::uint64_t seed) {
  CounterRng rng(seed, 0x90CCull);
  Policy pi;
  pi.probs.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      pi.probs(s, a) = rng.gamma(1.0) + 1e-6;
      sum += pi.probs(s, a);
    }
    pi.probs.row(s) /= sum;
  }
  return pi;
}

// Two-state deterministic cycle s0 -> s1 -> s0 with regret (0, 1).
inline Dmdp two_state_cycle(double gamma) {
  Dmdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 1;
  mdp.gamma = gamma;
  mdp.transition = MatrixXd::Zero(2, 2);
  mdp.transition(0, 1) = 1.0;
  mdp.transition(1, 0) = 1.0;
  mdp.reward.resize(2, 1);
  mdp.reward << 0.0, 1.0;
  return mdp;
}

// One state, two actions, regret (0, 1).
inline Dmdp one_state_two_action(double gamma) {
  Dmdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 2;
  mdp.gamma = gamma;
  mdp.transition = MatrixXd::Ones(2, 1);
  mdp.reward.resize(1, 2);
  mdp.reward << 0.0, 1.0;
  return mdp;
}

}  // namespace mdpopt::testing
