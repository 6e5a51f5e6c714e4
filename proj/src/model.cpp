#include "pomdpope/model.hpp"

#include <cmath>
#include <limits>

namespace pomdpope {

void TabularPomdp::validate() const {
  if (horizon < 1) throw StructuralError("horizon must be positive");
  if (actionCount < 1) throw StructuralError("actionCount must be positive");
  if (static_cast<int>(stateCounts.size()) != horizon)
    throw StructuralError("stateCounts must have one entry per step");
  if (static_cast<int>(obsCounts.size()) != horizon)
    throw StructuralError("obsCounts must have one entry per step");
  for (int h = 0; h < horizon; ++h) {
    if (stateCounts[h] < 1) throw StructuralError("stateCounts[" + std::to_string(h) + "] < 1");
    if (obsCounts[h] < 1) throw StructuralError("obsCounts[" + std::to_string(h) + "] < 1");
  }

  if (initialDist.size() != stateCounts[0])
    throw StructuralError("initialDist has wrong dimension");
  double d1sum = 0.0;
  for (Eigen::Index i = 0; i < initialDist.size(); ++i) {
    if (initialDist[i] < 0.0) throw StructuralError("initialDist has a negative entry");
    d1sum += initialDist[i];
  }
  if (std::abs(d1sum - 1.0) > kSimplexTol)
    throw StructuralError("initialDist sums to " + std::to_string(d1sum));

  if (static_cast<int>(transitions.size()) != horizon - 1)
    throw StructuralError("transitions must have H-1 steps");
  for (int h = 0; h + 1 < horizon; ++h) {
    if (static_cast<int>(transitions[h].size()) != actionCount)
      throw StructuralError("transitions[" + std::to_string(h) + "] must have one matrix per action");
    for (int a = 0; a < actionCount; ++a) {
      const Matrix& t = transitions[h][a];
      if (t.rows() != stateCounts[h + 1] || t.cols() != stateCounts[h])
        throw StructuralError("transitions[" + std::to_string(h) + "][" + std::to_string(a) +
                              "] has wrong shape");
      checkColumnStochastic(t, "transition (h=" + std::to_string(h) + ",a=" + std::to_string(a) + ")");
    }
  }

  if (static_cast<int>(emissions.size()) != horizon)
    throw StructuralError("emissions must have H steps");
  for (int h = 0; h < horizon; ++h) {
    const Matrix& o = emissions[h];
    if (o.rows() != obsCounts[h] || o.cols() != stateCounts[h])
      throw StructuralError("emissions[" + std::to_string(h) + "] has wrong shape");
    checkColumnStochastic(o, "emission (h=" + std::to_string(h) + ")");
  }

  if (static_cast<int>(rewards.size()) != horizon)
    throw StructuralError("rewards must have H steps");
  for (int h = 0; h < horizon; ++h) {
    if (static_cast<int>(rewards[h].size()) != obsCounts[h])
      throw StructuralError("rewards[" + std::to_string(h) + "] must have one entry per observation");
    for (int o = 0; o < obsCounts[h]; ++o) {
      double r = rewards[h][o];
      if (!(r >= 0.0 && r <= 1.0))
        throw StructuralError("reward out of [0,1] at (h=" + std::to_string(h) +
                              ",o=" + std::to_string(o) + "): " + std::to_string(r));
    }
  }
}

std::uint64_t TabularPomdp::enumerationSize(int steps) const {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (int h = 0; h < steps && h < horizon; ++h) {
    std::uint64_t branch =
        static_cast<std::uint64_t>(obsCounts[h]) * static_cast<std::uint64_t>(actionCount);
    if (total > kMax / branch) return kMax;
    total *= branch;
  }
  return total;
}

void Trajectory::validateAgainst(const TabularPomdp& model) const {
  if (length() != model.horizon)
    throw StructuralError("trajectory length " + std::to_string(length()) +
                          " does not match horizon " + std::to_string(model.horizon));
  for (int h = 0; h < model.horizon; ++h) {
    const StepRecord& s = steps[h];
    if (s.obs < 0 || s.obs >= model.obsCounts[h])
      throw StructuralError("observation index out of range at step " + std::to_string(h));
    if (s.action < 0 || s.action >= model.actionCount)
      throw StructuralError("action index out of range at step " + std::to_string(h));
    if (std::abs(s.reward - model.reward(h, s.obs)) > 1e-12)
      throw StructuralError("reward mismatch at step " + std::to_string(h));
  }
}

void Dataset::validateAgainst(const TabularPomdp& model) const {
  for (const auto& tau : trajectories) tau.validateAgainst(model);
}

}  // namespace pomdpope
