#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pomdpope/core.hpp"

namespace pomdpope {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A matrix counts as singular (coefficient = inf) when cond > 1e12 or
/// sigma_min < 1e-12 * sigma_max.
inline constexpr double kConditionCutoff = 1e12;

enum class RevealingMode { Single, Multi };

/// Induced 1-norm: max absolute column sum.
double matrixL1Norm(const Matrix& m);

/// max over reachable (tau_{h-1}, o_h) with P^{pi_b} > 0, and all a_h, of
/// 1 / pi_b(a_h | tau_{h-1}, o_h); inf if a reachable action has probability 0.
double computeCA(const TabularPomdp& model, const Policy& piB,
                 std::uint64_t cap = kDefaultEnumerationCap);

struct SigmaResult {
  Matrix sigma;
  double coefficient = kInf;  // 1/sigma_min for Sigma_H, ||Sigma^{-1}||_1 otherwise
  bool monteCarlo = false;
};

/// Sigma_{H,h} = E_{pi_b}[b_S(tau_{h-1}) b_S(tau_{h-1})^T] over S_h, with
/// c_h = 1/sigma_min. Exact mode enumerates histories; Monte Carlo mode
/// averages over `mcSamples` sampled histories.
SigmaResult sigmaHistory(const TabularPomdp& model, const Policy& piB, int step,
                         std::uint64_t cap = kDefaultEnumerationCap);
SigmaResult sigmaHistoryMonteCarlo(const TabularPomdp& model, const Policy& piB, int step,
                                   std::uint64_t mcSamples, std::uint64_t seed);
SigmaResult sigmaHistoryMonteCarloSerial(const TabularPomdp& model, const Policy& piB,
                                         int step, std::uint64_t mcSamples,
                                         std::uint64_t seed);

/// Outcome matrix U_{F,h}: rows indexed by futures in lexicographic
/// (o, a, ...) order, [U]_{f,s} = P^{pi_b}(f | s_h = s). Requires memoryless
/// pi_b. Each column sums to 1.
Matrix outcomeMatrix(const TabularPomdp& model, const Policy& piB, int step,
                     std::uint64_t cap = kDefaultEnumerationCap);

/// Sigma_{O,h} = O_h^T W_h^{-1} O_h with W_h = diag(O_h 1); zero rows of O_h
/// are dropped before forming W_h. Coefficient is ||Sigma^{-1}||_1.
SigmaResult sigmaObs(const TabularPomdp& model, int step);

/// Sigma_{F,h} = U^T Z^{-1} U with Z = diag(U 1); zero rows dropped.
SigmaResult sigmaFuture(const TabularPomdp& model, const Policy& piB, int step,
                        std::uint64_t cap = kDefaultEnumerationCap);

/// Occupancy-weighted Sigma^{p_h}_{F,h} = diag(p) U^T (Z^p)^{-1} U with
/// p = d^{pi_b}_h(s). Columns are conditional distributions over states.
SigmaResult sigmaFutureWeighted(const TabularPomdp& model, const Policy& piB, int step,
                                std::uint64_t cap = kDefaultEnumerationCap);

struct CoverageReport {
  double cA = kInf;
  std::vector<double> cH;          // per step h in [0, H-2]
  std::vector<double> cO;
  std::vector<double> cF;
  std::vector<double> cFWeighted;
  bool cHMonteCarlo = false;
};

struct CoverageOptions {
  bool history = true;
  bool single = true;
  bool multi = false;
  bool weighted = false;
  std::uint64_t cap = kDefaultEnumerationCap;
  std::uint64_t mcSamples = 0;  // > 0 forces Monte Carlo for Sigma_H
  std::uint64_t seed = 0;
};

CoverageReport coverageReport(const TabularPomdp& model, const Policy& piB,
                              const CoverageOptions& options);

/// Retains the models whose own per-step coefficient (c_o in Single mode, c_f
/// in Multi mode) is <= threshold for every h in [0, H-2]; preserves order.
std::vector<const TabularPomdp*> prefilter(std::span<const TabularPomdp* const> models,
                                           const Policy& piB, RevealingMode mode,
                                           double threshold,
                                           std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace pomdpope
