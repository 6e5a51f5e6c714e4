#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pomdpope/coverage.hpp"
#include "pomdpope/oom.hpp"

namespace pomdpope {

/// Finite candidate class sharing H, A, and per-step observation counts
/// (state counts may differ across members).
struct ModelClass {
  std::vector<TabularPomdp> models;
  std::optional<std::size_t> trueIndex;

  void validate() const;
};

struct OpeResult {
  double estimate = 0.0;
  std::string method;  // model-based-mle | importance-sampling | true-value
  std::optional<std::size_t> selectedModelIndex;
  std::map<std::string, double> diagnostics;
};

struct LikelihoodOptions {
  /// Per-trajectory probability floor applied before log; default off so that
  /// model misfit surfaces as ZeroLikelihoodError.
  bool floorMode = false;
  double floorValue = 1e-300;
};

/// sum_i log P^{pi_b}_M(tau^(i)), including the pi_b action factor (identical
/// across models, hence argmax-invariant). Parallelized over trajectories with
/// a deterministic index-ordered reduction.
double logLikelihood(const TabularPomdp& model, const Policy& piB, const Dataset& data,
                     const LikelihoodOptions& options = {});
double logLikelihoodSerial(const TabularPomdp& model, const Policy& piB, const Dataset& data,
                           const LikelihoodOptions& options = {});

/// Argmax of logLikelihood over the (pre-filtered) class; ties broken by
/// lowest index. Throws EmptyClassError on an empty class.
std::size_t mleSelect(std::span<const TabularPomdp* const> models, const Policy& piB,
                      const Dataset& data, const LikelihoodOptions& options = {});

struct OpeOptions {
  RevealingMode mode = RevealingMode::Single;
  double threshold = kInf;
  std::uint64_t cap = kDefaultEnumerationCap;
  LikelihoodOptions likelihood;
  /// Compute C_eff / eps_approx diagnostics when trueIndex is available.
  bool coefficientDiagnostics = false;
};

/// Pre-filtering -> MLE -> prediction (J_{M_hat}(pi_e)).
OpeResult modelBasedOpe(const ModelClass& models, const Policy& piB, const Policy& piE,
                        const Dataset& data, const OpeOptions& options);

/// Full-trajectory sequential importance sampling baseline.
OpeResult importanceSamplingOpe(const Dataset& data, const Policy& piE, const Policy& piB);

/// Everything a model-free algorithm may learn about pi_e: the action
/// distribution on every observed history prefix, ordered by (i, h).
struct PolicyTranscript {
  std::vector<double> entries;
  friend bool operator==(const PolicyTranscript&, const PolicyTranscript&) = default;
};

PolicyTranscript restrictedPolicyOracle(const Policy& piE, const Dataset& data);

/// C_eff,1: max-over-h ratio of pi_e- to pi_b-weighted operator error
/// ||(B_hat - B) O_h b_S(tau_{h-1})||_1, with B_hat from Mhat and the shared
/// O_h / b_S factors from Mstar. Returns 1.0 when every error term vanishes.
double cEffSingle(const TabularPomdp& mStar, const TabularPomdp& mHat, const Policy& piE,
                  const Policy& piB, std::uint64_t cap = kDefaultEnumerationCap);

struct CEffMultiResult {
  double cEff = 0.0;
  std::optional<double> cEffTilde;  // memoryless-pi_e tightening
};

/// C_eff,m with U_{F,h} in place of O_h; requires memoryless pi_b. When
/// `memorylessVariant` is set (and pi_e is memoryless), also computes the
/// tighter coefficient with the absolute value outside the expectation.
CEffMultiResult cEffMulti(const TabularPomdp& mStar, const TabularPomdp& mHat,
                          const Policy& piE, const Policy& piB, bool memorylessVariant = false,
                          std::uint64_t cap = kDefaultEnumerationCap);

/// min_M (1/n) sum_i [log P_{Mstar} - log P_M] over the class.
double epsApprox(const ModelClass& models, const TabularPomdp& mStar, const Policy& piB,
                 const Dataset& data, const LikelihoodOptions& options = {});

/// Future-dependent value function V_{F,h} satisfying U^T V_F = V^{pi_e}_S.
/// Entries for probability-zero futures are 0. Requires memoryless pi_b and
/// pi_e and strictly positive Monte-Carlo returns on all reachable futures.
Vector fdvfConstruct(const TabularPomdp& model, const Policy& piB, const Policy& piE,
                     int step, std::uint64_t cap = kDefaultEnumerationCap);

/// Exact full-trajectory total variation distance between two models under a
/// common policy (enumeration).
double trajectoryTotalVariation(const TabularPomdp& a, const TabularPomdp& b,
                                const Policy& pi, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace pomdpope
