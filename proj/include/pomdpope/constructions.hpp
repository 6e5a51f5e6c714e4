#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pomdpope/estimators.hpp"

namespace pomdpope {

/// A counterexample fixture: the true model, a candidate class, the policies,
/// and golden values re-derived (and checked) at construction time.
struct HardnessBundle {
  TabularPomdp trueModel;
  ModelClass modelClass;
  Policy behaviorPolicy;
  std::vector<Policy> targetPolicies;
  std::map<std::string, double> expectedValues;        // policy id -> J
  std::map<std::string, double> expectedCoefficients;  // name -> value (may be inf)
};

/// Chain with a single state per step, two terminal states reached by the
/// L/R branch at step H-1, identity emissions, reward 1 on the L terminal.
/// Targets pi_1 / pi_2 agree everywhere except the all-L history at step H-1;
/// both take the fixed common action L on any history containing an R.
HardnessBundle theorem3Instance(int horizon, bool verify = true);

/// Observable-equivalent pair: M_1 records the full action history in its
/// latent state and matches the single-state true model's observable process;
/// M_2 differs only in where the all-R state at step H-1 transitions under R.
HardnessBundle theorem6Instance(int horizon, bool verify = true,
                                std::uint64_t cap = kDefaultEnumerationCap);

enum class RandomRevealing { None, Single, Multi };

struct RandomPomdpSpec {
  int horizon = 3;
  std::vector<int> stateCounts;
  int actionCount = 2;
  std::vector<int> obsCounts;
  RandomRevealing revealingMode = RandomRevealing::None;
  double minSingular = 0.05;
  int maxAttempts = 1000;
};

/// Dirichlet(1) columns; under a revealing mode, emissions are resampled until
/// every Sigma matrix clears `minSingular` (GenerationFailureError when the
/// attempt budget runs out). Bit-identical output for a fixed seed.
TabularPomdp randomPomdp(const RandomPomdpSpec& spec, std::uint64_t seed);

/// POMDP with identity emissions; obsCounts = stateCounts, rewards re-indexed
/// by observation.
TabularPomdp mdpEmbed(const std::vector<std::vector<Matrix>>& transitions,
                      const std::vector<std::vector<double>>& stateRewards,
                      const Vector& initialDist);

/// Random memoryless policy with Dirichlet(1) action distributions, optionally
/// mixed with uniform to keep probabilities off zero.
Policy randomMemorylessPolicy(const TabularPomdp& model, std::uint64_t seed,
                              double uniformMix = 0.0);

}  // namespace pomdpope
