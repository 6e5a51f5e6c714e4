#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "pomdpope/enumerate.hpp"
#include "pomdpope/model.hpp"
#include "pomdpope/policy.hpp"
#include "pomdpope/rng.hpp"

namespace pomdpope {

struct TrajectoryProb {
  double environment = 0.0;  // P_M(tau)
  double policy = 0.0;       // pi(tau)
  double total() const { return environment * policy; }
};

/// P^pi_M(tau_{0:upToStep}) by direct forward recursion over latent states,
/// split into environment and policy factors. `upToStep` counts completed
/// steps (upToStep == H covers the full trajectory).
TrajectoryProb trajectoryProb(const TabularPomdp& model, const Policy& pi,
                              const Trajectory& tau, int upToStep);

/// Forward-filtered posterior over S_{h+1} given the first `throughStep+1`
/// (o, a) records of tau. Throws ZeroProbabilityHistoryError when
/// P_M(tau) = 0. Note o_{h+1} is not conditioned on.
BeliefVector beliefState(const TabularPomdp& model, HistoryView history);

/// Exact J(pi) by enumerating all trajectories; throws CapacityError above cap.
double policyValueExact(const TabularPomdp& model, const Policy& pi,
                        std::uint64_t cap = kDefaultEnumerationCap);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standardError = 0.0;
  std::uint64_t samples = 0;
};

/// Unbiased Monte Carlo estimate of J(pi) with reported standard error.
MonteCarloEstimate policyValueMonteCarlo(const TabularPomdp& model, const Policy& pi,
                                         std::uint64_t samples, std::uint64_t seed);

/// One episode of the generative process; deterministic given `rng` state.
Trajectory sampleTrajectory(const TabularPomdp& model, const Policy& pi, Rng& rng);

/// n independent episodes; trajectory i is drawn from substream (seed, i), so
/// the result is independent of scheduling. Parallelized over trajectories.
Dataset sampleDataset(const TabularPomdp& model, const Policy& pi, std::uint64_t n,
                      std::uint64_t seed);

/// Serial reference for sampleDataset (identical output by construction).
Dataset sampleDatasetSerial(const TabularPomdp& model, const Policy& pi, std::uint64_t n,
                            std::uint64_t seed);

/// Marginal distribution d^pi_h over (s_h, a_h), indexed [s][a]. Memoryless
/// policies use the exact forward recursion; history-dependent policies fall
/// back to history enumeration under `cap`.
Matrix latentOccupancy(const TabularPomdp& model, const Policy& pi, int step,
                       std::uint64_t cap = kDefaultEnumerationCap);

/// State-only marginal d^pi_h(s) (action-marginalized occupancy).
Vector latentStateOccupancy(const TabularPomdp& model, const Policy& pi, int step,
                            std::uint64_t cap = kDefaultEnumerationCap);

/// Latent-state value function V^{pi_e}_{S,h}: expected reward-to-go from step
/// h given s_h = s. Defined only for memoryless pi_e.
Vector latentValue(const TabularPomdp& model, const Policy& piE, int step);

/// Convenience: a trajectory forced to start from latent state `state` at step
/// `step` (prefix records are absent; used by conditional-rollout oracles).
Trajectory sampleFutureFromState(const TabularPomdp& model, const Policy& pi, int step,
                                 int state, Rng& rng);

}  // namespace pomdpope
