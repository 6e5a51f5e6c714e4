#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pomdpope/errors.hpp"

namespace pomdpope {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSimplexTol = 1e-12;

/// Default cap on Π_h(|O_h|·A) for exact-mode enumeration.
inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// Finite-horizon tabular POMDP with per-step state and observation spaces.
///
/// Steps are 0-based: transitions[h][a] maps S_h -> S_{h+1} (column-stochastic,
/// shape |S_{h+1}| x |S_h|) for h in [0, H-2]; emissions[h] has shape
/// |O_h| x |S_h|; rewards[h][o] is the known reward of observation o at step h.
struct TabularPomdp {
  int horizon = 0;
  std::vector<int> stateCounts;               // per step, size H
  int actionCount = 0;
  std::vector<int> obsCounts;                 // per step, size H
  Vector initialDist;                         // over S_0
  std::vector<std::vector<Matrix>> transitions;  // [h][a], h in [0, H-2]
  std::vector<Matrix> emissions;              // [h], h in [0, H-1]
  std::vector<std::vector<double>> rewards;   // [h][o]

  /// Throws StructuralError on any invariant violation.
  void validate() const;

  double reward(int step, int obs) const { return rewards[step][obs]; }

  /// Theoretical number of length-`steps` observation-action sequences,
  /// saturating instead of overflowing.
  std::uint64_t enumerationSize(int steps) const;
};

struct StepRecord {
  int obs = 0;
  int action = 0;
  double reward = 0.0;
};

/// A complete episode: exactly H (observation, action, reward) records.
struct Trajectory {
  std::vector<StepRecord> steps;

  int length() const { return static_cast<int>(steps.size()); }
  double totalReturn() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
  void validateAgainst(const TabularPomdp& model) const;
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::string behaviorPolicyId;
  std::uint64_t seed = 0;

  std::size_t size() const { return trajectories.size(); }
  void validateAgainst(const TabularPomdp& model) const;
};

/// Posterior over S_{h+1} given a history through step h (0-based).
struct BeliefVector {
  int step = 0;
  Vector values;
};

inline void checkColumnStochastic(const Matrix& m, const std::string& what) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) < 0.0)
        throw StructuralError(what + ": negative entry at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      sum += m(i, j);
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
      throw StructuralError(what + ": column " + std::to_string(j) + " sums to " +
                            std::to_string(sum));
  }
}

}  // namespace pomdpope
