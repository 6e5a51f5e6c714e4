#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pomdpope/coverage.hpp"
#include "pomdpope/core.hpp"

namespace pomdpope {

/// Observable-operator parameterization of a POMDP.
///
/// Single mode: b0 = O_1 d_1 and B_h(o,a) = O_{h+1} T_{h,a} diag(O_h(o|.)) O_h^{+,w}.
/// Multi mode replaces O_h with the outcome matrix U_{F,h} (rows = futures).
/// Products of operators applied to b0 reproduce trajectory probabilities.
struct OomModel {
  RevealingMode mode = RevealingMode::Single;
  int horizon = 0;
  Vector b0;
  // operators[h][o][a] for h in [0, H-2]; maps dim(h) -> dim(h+1) where dim is
  // |O_h| (single) or |F_h| (multi).
  std::vector<std::vector<std::vector<Matrix>>> operators;
  // Stored weighted pseudo-inverses O_h^{+,w} (or U_{F,h}^{+,w}) per step.
  std::vector<Matrix> weightedPseudoInverses;
  // Multi mode: |F_h| per step for index bookkeeping.
  std::vector<std::uint64_t> futureCounts;

  const Matrix& op(int step, int obs, int action) const {
    return operators[step][obs][action];
  }
};

struct OomBuildOptions {
  std::uint64_t cap = kDefaultEnumerationCap;
  /// Residual cutoff for the randomized construction spot check.
  double spotCheckTolerance = 1e-6;
  int spotCheckTrajectories = 100;
  std::uint64_t spotCheckSeed = 7;
};

/// Builds the OOM; fails loudly (RevealingViolationError) when a Sigma matrix
/// is singular, and verifies the reconstruction identity on a randomized spot
/// check of trajectories. Multi mode requires memoryless piB.
OomModel buildOom(const TabularPomdp& model, RevealingMode mode, const Policy* piB = nullptr,
                  const OomBuildOptions& options = {});

/// P^pi(tau) via the operator product e_{o_H}^T B_{H-1} ... B_1 b0, times the
/// policy factor.
TrajectoryProb oomTrajectoryProb(const OomModel& oom, const Policy& pi, const Trajectory& tau);

/// L1 residual of b(tau_h) - P_M(tau_h) * (O_{h+1} or U_{F,h+1}) * b_S(tau_h);
/// exact identity, so the contract is <= 1e-8.
double beliefRelationResidual(const TabularPomdp& model, const OomModel& oom,
                              HistoryView history, const Policy* piB = nullptr,
                              std::uint64_t cap = kDefaultEnumerationCap);

/// Left-hand side of the operator contraction lemma:
/// sum over tau_{j+1..h} of ||B_h ... B_{j+1} x||_1 * pi(tau | tau_j).
/// Bounded by the instance's c_o (or c_f) times ||x||_1.
double operatorContractionSum(const OomModel& oom, const Vector& x, int fromStep, int toStep,
                              const Policy& pi, HistoryView prefix = {});

}  // namespace pomdpope
