#include "pomdpope/oom.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace pomdpope {

namespace {

struct WeightedPinv {
  Matrix pinv;   // |S_h| x dim(h)
  Matrix sigma;  // |S_h| x |S_h|
};

// Sigma^{-1} M^T W^{-1} with zero-mass rows dropped (their columns are zero).
WeightedPinv weightedPseudoInverse(const Matrix& m, int step) {
  Vector rowMass = m.rowwise().sum();
  const Eigen::Index s = m.cols();
  Matrix sigma = Matrix::Zero(s, s);
  Matrix weightedT = Matrix::Zero(s, m.rows());
  for (Eigen::Index f = 0; f < m.rows(); ++f) {
    if (rowMass[f] <= 0.0) continue;
    sigma.noalias() += m.row(f).transpose() * m.row(f) / rowMass[f];
    weightedT.col(f) = m.row(f).transpose() / rowMass[f];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  Vector mags = eig.eigenvalues().cwiseAbs();
  double smin = mags.minCoeff();
  double smax = mags.maxCoeff();
  if (smin <= 0.0 || smin < 1e-12 * smax || smax / smin > kConditionCutoff)
    throw RevealingViolationError("revealing matrix is singular", step);
  // Pivoted solve instead of an explicit inverse.
  return {sigma.fullPivLu().solve(weightedT), std::move(sigma)};
}

double envProbability(const TabularPomdp& model, HistoryView history) {
  Vector alpha = model.initialDist;
  for (std::size_t t = 0; t < history.size(); ++t) {
    Vector beta = model.emissions[t].row(history[t].obs).transpose().cwiseProduct(alpha);
    alpha.noalias() = model.transitions[t][history[t].action] * beta;
  }
  return alpha.sum();
}

}  // namespace

OomModel buildOom(const TabularPomdp& model, RevealingMode mode, const Policy* piB,
                  const OomBuildOptions& options) {
  const int horizon = model.horizon;
  if (mode == RevealingMode::Multi) {
    if (piB == nullptr || !piB->memorylessFlag())
      throw UnsupportedPolicyError("multi-step OOM requires a memoryless behavior policy");
  }

  OomModel oom;
  oom.mode = mode;
  oom.horizon = horizon;

  // Base matrices per step: emissions (single) or outcome matrices (multi).
  std::vector<Matrix> base(horizon);
  for (int h = 0; h < horizon; ++h) {
    base[h] = mode == RevealingMode::Single ? model.emissions[h]
                                            : outcomeMatrix(model, *piB, h, options.cap);
    oom.futureCounts.push_back(static_cast<std::uint64_t>(base[h].rows()));
  }

  oom.b0 = base[0] * model.initialDist;
  oom.operators.resize(std::max(0, horizon - 1));
  oom.weightedPseudoInverses.resize(std::max(0, horizon - 1));
  for (int h = 0; h + 1 < horizon; ++h) {
    WeightedPinv wp = weightedPseudoInverse(base[h], h);
    oom.weightedPseudoInverses[h] = wp.pinv;
    oom.operators[h].resize(model.obsCounts[h]);
    for (int o = 0; o < model.obsCounts[h]; ++o) {
      oom.operators[h][o].resize(model.actionCount);
      Matrix emitPinv = model.emissions[h].row(o).transpose().asDiagonal() * wp.pinv;
      for (int a = 0; a < model.actionCount; ++a)
        oom.operators[h][o][a].noalias() = base[h + 1] * (model.transitions[h][a] * emitPinv);
    }
  }

  // Randomized construction spot check against the forward recursion.
  Policy uniform = Policy::uniformMemoryless(model);
  for (int i = 0; i < options.spotCheckTrajectories; ++i) {
    Rng rng = Rng::substream(options.spotCheckSeed, static_cast<std::uint64_t>(i));
    Trajectory tau = sampleTrajectory(model, uniform, rng);
    double viaOom = oomTrajectoryProb(oom, uniform, tau).environment;
    double viaRecursion = trajectoryProb(model, uniform, tau, horizon).environment;
    if (std::abs(viaOom - viaRecursion) > options.spotCheckTolerance)
      throw Error("OOM construction spot check failed: reconstruction residual " +
                  std::to_string(std::abs(viaOom - viaRecursion)));
  }
  return oom;
}

TrajectoryProb oomTrajectoryProb(const OomModel& oom, const Policy& pi, const Trajectory& tau) {
  if (tau.length() != oom.horizon) throw StructuralError("trajectory length mismatch");
  Vector v = oom.b0;
  std::vector<OaPair> history;
  history.reserve(oom.horizon);
  double policyFactor = 1.0;
  for (int h = 0; h < oom.horizon; ++h) {
    const StepRecord& s = tau.steps[h];
    policyFactor *= pi.actionProb(h, history, s.obs, s.action);
    history.push_back({s.obs, s.action});
    if (h + 1 < oom.horizon) v = oom.op(h, s.obs, s.action) * v;
  }
  // At the final step F_H = O_H, so e_{f_H} is the observation indicator.
  return {v[tau.steps[oom.horizon - 1].obs], policyFactor};
}

double beliefRelationResidual(const TabularPomdp& model, const OomModel& oom,
                              HistoryView history, const Policy* piB, std::uint64_t cap) {
  const int t = static_cast<int>(history.size());
  if (t > model.horizon - 1) throw StructuralError("history longer than H-1 steps");
  BeliefVector belief = beliefState(model, history);  // throws on zero probability
  Vector lhs = oom.b0;
  for (int h = 0; h < t; ++h) lhs = oom.op(h, history[h].obs, history[h].action) * lhs;
  double prob = envProbability(model, history);
  Vector rhs;
  if (oom.mode == RevealingMode::Single) {
    rhs = prob * (model.emissions[t] * belief.values);
  } else {
    rhs = prob * (outcomeMatrix(model, *piB, t, cap) * belief.values);
  }
  return (lhs - rhs).cwiseAbs().sum();
}

namespace {

double contractionRecurse(const OomModel& oom, const Policy& pi, std::vector<OaPair>& history,
                          int t, int toStep, const Vector& v, double weight,
                          const TabularPomdp* /*unused*/) {
  if (t > toStep) return weight * v.cwiseAbs().sum();
  double total = 0.0;
  const int obsCount = static_cast<int>(oom.operators[t].size());
  const int actionCount = static_cast<int>(oom.operators[t][0].size());
  for (int o = 0; o < obsCount; ++o) {
    for (int a = 0; a < actionCount; ++a) {
      double pa = pi.actionProb(t, history, o, a);
      if (pa == 0.0) continue;
      Vector next = oom.op(t, o, a) * v;
      history.push_back({o, a});
      total += contractionRecurse(oom, pi, history, t + 1, toStep, next, weight * pa, nullptr);
      history.pop_back();
    }
  }
  return total;
}

}  // namespace

double operatorContractionSum(const OomModel& oom, const Vector& x, int fromStep, int toStep,
                              const Policy& pi, HistoryView prefix) {
  if (fromStep < 0 || toStep >= oom.horizon - 1 || fromStep > toStep)
    throw StructuralError("contraction step range out of bounds");
  if (static_cast<int>(prefix.size()) != fromStep)
    throw StructuralError("prefix length must equal the first operator step");
  std::vector<OaPair> history(prefix.begin(), prefix.end());
  return contractionRecurse(oom, pi, history, fromStep, toStep, x, 1.0, nullptr);
}

}  // namespace pomdpope
