#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pomdpope/model.hpp"
#include "pomdpope/policy.hpp"

namespace pomdpope {

/// Callback payload for history enumeration.
///
/// `history` is tau_{h-1} (0-based steps 0..h-2 consumed); `alphas[m]` is the
/// unnormalized latent vector over S_h with alphas[m][s] = P_{M_m}(tau, s_h=s);
/// `policyWeights[p]` is the product of action probabilities under policy p.
struct HistoryVisit {
  HistoryView history;
  std::span<const Vector> alphas;
  std::span<const double> policyWeights;
};

using HistoryVisitor = std::function<void(const HistoryVisit&)>;

/// Enumerates every history tau_{h-1} feeding 0-based step `step` whose
/// environment probability is positive under at least one model and whose
/// action weight is positive under at least one policy. All models must share
/// observation spaces and action count; policies may be history-dependent.
///
/// Throws CapacityError if the theoretical count Π_{t<step}(|O_t|·A)
/// exceeds `cap`.
void forEachHistory(std::span<const TabularPomdp* const> models,
                    std::span<const Policy* const> policies, int step, std::uint64_t cap,
                    const HistoryVisitor& visitor);

/// Callback payload for full-trajectory enumeration: `envProbs[m]` is
/// P_{M_m}(tau) (environment factor), `policyWeights[p]` is pi_p(tau) over all
/// H actions.
struct TrajectoryVisit {
  HistoryView trajectory;  // H (o, a) pairs
  std::span<const double> envProbs;
  std::span<const double> policyWeights;
};

using TrajectoryVisitor = std::function<void(const TrajectoryVisit&)>;

void forEachTrajectory(std::span<const TabularPomdp* const> models,
                       std::span<const Policy* const> policies, std::uint64_t cap,
                       const TrajectoryVisitor& visitor);

/// Number of futures |F_h| = Π_{t=h}^{H-2}(|O_t|·A) · |O_{H-1}| (0-based h),
/// saturating at UINT64_MAX.
std::uint64_t futureCount(const TabularPomdp& model, int step);

/// Decodes the lexicographic future index at step h into its (o, a, ..., o_H)
/// sequence; the final element has action -1.
std::vector<OaPair> decodeFuture(const TabularPomdp& model, int step, std::uint64_t index);

}  // namespace pomdpope
