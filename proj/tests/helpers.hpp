#pragma once

#include <vector>

#include "pomdpope/constructions.hpp"

namespace pomdpope::testing {

/// Independent trajectory-probability oracle: explicit sum over latent state
/// sequences, no forward recursion shared with the library code.
inline double bruteForceProb(const TabularPomdp& model, const Policy& pi,
                             const Trajectory& tau) {
  const int horizon = model.horizon;
  double policyFactor = 1.0;
  std::vector<OaPair> history;
  for (int h = 0; h < horizon; ++h) {
    policyFactor *= pi.actionProb(h, history, tau.steps[h].obs, tau.steps[h].action);
    history.push_back({tau.steps[h].obs, tau.steps[h].action});
  }
  std::vector<int> states(horizon, 0);
  double env = 0.0;
  while (true) {
    double p = model.initialDist[states[0]];
    for (int h = 0; h < horizon && p > 0.0; ++h) {
      p *= model.emissions[h](tau.steps[h].obs, states[h]);
      if (h + 1 < horizon) p *= model.transitions[h][tau.steps[h].action](states[h + 1], states[h]);
    }
    env += p;
    int h = horizon - 1;
    while (h >= 0 && ++states[h] == model.stateCounts[h]) states[h--] = 0;
    if (h < 0) break;
  }
  return env * policyFactor;
}

/// Joint probability of (history, s at the next step) by explicit summation.
inline double bruteForceJoint(const TabularPomdp& model, HistoryView history, int state) {
  const int len = static_cast<int>(history.size());
  std::vector<int> states(len, 0);
  double total = 0.0;
  if (len == 0) return model.initialDist[state];
  while (true) {
    double p = model.initialDist[states[0]];
    for (int h = 0; h < len && p > 0.0; ++h) {
      p *= model.emissions[h](history[h].obs, states[h]);
      int next = h + 1 < len ? states[h + 1] : state;
      p *= model.transitions[h][history[h].action](next, states[h]);
    }
    total += p;
    int h = len - 1;
    while (h >= 0 && ++states[h] == model.stateCounts[h]) states[h--] = 0;
    if (h < 0) break;
  }
  return total;
}

inline TabularPomdp smallRandomInstance(std::uint64_t seed, int horizon = 3, int states = 2,
                                        int obs = 3, int actions = 2,
                                        RandomRevealing revealing = RandomRevealing::None) {
  RandomPomdpSpec spec;
  spec.horizon = horizon;
  spec.stateCounts.assign(horizon, states);
  spec.obsCounts.assign(horizon, obs);
  spec.actionCount = actions;
  spec.revealingMode = revealing;
  return randomPomdp(spec, seed);
}

}  // namespace pomdpope::testing
