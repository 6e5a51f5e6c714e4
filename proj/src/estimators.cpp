#include "pomdpope/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace pomdpope {

void ModelClass::validate() const {
  for (std::size_t m = 0; m < models.size(); ++m) {
    models[m].validate();
    if (m == 0) continue;
    if (models[m].horizon != models[0].horizon ||
        models[m].actionCount != models[0].actionCount ||
        models[m].obsCounts != models[0].obsCounts)
      throw StructuralError("model class member " + std::to_string(m) +
                            " disagrees on horizon, actions, or observation counts");
  }
  if (trueIndex && *trueIndex >= models.size())
    throw StructuralError("model class trueIndex out of range");
}

namespace {

double logLikelihoodImpl(const TabularPomdp& model, const Policy& piB, const Dataset& data,
                         const LikelihoodOptions& options, bool parallel) {
  const std::int64_t n = static_cast<std::int64_t>(data.trajectories.size());
  std::vector<double> terms(n);
  std::vector<std::int64_t> zeroAt(n, -1);
  std::vector<std::exception_ptr> errors(n);
  const auto body = [&](std::int64_t i) {
    double p = trajectoryProb(model, piB, data.trajectories[i], model.horizon).total();
    if (p <= 0.0) {
      if (!options.floorMode) {
        zeroAt[i] = i;
        return;
      }
      p = options.floorValue;
    } else if (options.floorMode) {
      p = std::max(p, options.floorValue);
    }
    terms[i] = std::log(p);
  };
  // Exceptions must not escape the parallel region; capture and rethrow the
  // first one by index.
  const auto guarded = [&](std::int64_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) guarded(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) guarded(i);
  }
  for (std::int64_t i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
  for (std::int64_t i = 0; i < n; ++i)
    if (zeroAt[i] >= 0)
      throw ZeroLikelihoodError("trajectory has zero probability under the model",
                                static_cast<std::size_t>(zeroAt[i]));
  // Index-ordered reduction keeps the sum independent of thread count.
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace

double logLikelihood(const TabularPomdp& model, const Policy& piB, const Dataset& data,
                     const LikelihoodOptions& options) {
  return logLikelihoodImpl(model, piB, data, options, true);
}

double logLikelihoodSerial(const TabularPomdp& model, const Policy& piB, const Dataset& data,
                           const LikelihoodOptions& options) {
  return logLikelihoodImpl(model, piB, data, options, false);
}

std::size_t mleSelect(std::span<const TabularPomdp* const> models, const Policy& piB,
                      const Dataset& data, const LikelihoodOptions& options) {
  if (models.empty()) throw EmptyClassError("model class is empty");
  std::size_t best = 0;
  double bestLik = logLikelihood(*models[0], piB, data, options);
  for (std::size_t m = 1; m < models.size(); ++m) {
    double lik = logLikelihood(*models[m], piB, data, options);
    if (lik > bestLik) {  // strict: ties resolve to the lowest index
      best = m;
      bestLik = lik;
    }
  }
  return best;
}

OpeResult modelBasedOpe(const ModelClass& models, const Policy& piB, const Policy& piE,
                        const Dataset& data, const OpeOptions& options) {
  models.validate();
  std::vector<const TabularPomdp*> pointers;
  pointers.reserve(models.models.size());
  for (const TabularPomdp& m : models.models) pointers.push_back(&m);
  std::vector<const TabularPomdp*> kept =
      prefilter(pointers, piB, options.mode, options.threshold, options.cap);
  if (kept.empty()) throw EmptyClassError("model class is empty after pre-filtering");

  std::size_t keptIdx = mleSelect(kept, piB, data, options.likelihood);
  // Map the survivor pointer back to its position in the original class.
  std::size_t selected = 0;
  for (std::size_t m = 0; m < pointers.size(); ++m)
    if (pointers[m] == kept[keptIdx]) selected = m;

  const TabularPomdp& mHat = models.models[selected];
  OpeResult result;
  result.method = "model-based-mle";
  result.selectedModelIndex = selected;
  result.estimate = policyValueExact(mHat, piE, options.cap);
  result.diagnostics["n"] = static_cast<double>(data.trajectories.size());
  result.diagnostics["survivors"] = static_cast<double>(kept.size());
  result.diagnostics["selected_index"] = static_cast<double>(selected);
  if (models.trueIndex) {
    const TabularPomdp& mStar = models.models[*models.trueIndex];
    double trueValue = policyValueExact(mStar, piE, options.cap);
    result.diagnostics["true_value"] = trueValue;
    result.diagnostics["abs_error"] = std::abs(trueValue - result.estimate);
    if (options.coefficientDiagnostics) {
      result.diagnostics["tv_full"] =
          trajectoryTotalVariation(mStar, mHat, piB, options.cap);
      result.diagnostics["eps_approx"] =
          epsApprox(models, mStar, piB, data, options.likelihood);
      try {
        if (options.mode == RevealingMode::Single)
          result.diagnostics["c_eff_single"] =
              cEffSingle(mStar, mHat, piE, piB, options.cap);
        else
          result.diagnostics["c_eff_multi"] =
              cEffMulti(mStar, mHat, piE, piB, false, options.cap).cEff;
      } catch (const RevealingViolationError&) {
        // A selected model outside the revealing set has no finite coefficient.
      }
    }
  }
  return result;
}

OpeResult importanceSamplingOpe(const Dataset& data, const Policy& piE, const Policy& piB) {
  const std::size_t n = data.trajectories.size();
  if (n == 0) throw ParameterError("importance sampling needs a nonempty dataset");
  double sum = 0.0;
  double maxWeight = 0.0;
  double ratioSum = 0.0;
  double ratioSumSq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Trajectory& tau = data.trajectories[i];
    double ratio = 1.0;
    std::vector<OaPair> history;
    history.reserve(tau.length());
    for (int h = 0; h < tau.length(); ++h) {
      const StepRecord& s = tau.steps[h];
      double pb = piB.actionProb(h, history, s.obs, s.action);
      if (pb <= 0.0)
        throw ParameterError("behavior policy assigns zero probability to an observed action "
                             "(trajectory " + std::to_string(i) + ", step " + std::to_string(h) +
                             ")");
      ratio *= piE.actionProb(h, history, s.obs, s.action) / pb;
      history.push_back({s.obs, s.action});
    }
    sum += ratio * tau.totalReturn();
    maxWeight = std::max(maxWeight, ratio);
    ratioSum += ratio;
    ratioSumSq += ratio * ratio;
  }
  OpeResult result;
  result.method = "importance-sampling";
  result.estimate = sum / static_cast<double>(n);
  result.diagnostics["n"] = static_cast<double>(n);
  result.diagnostics["max_weight"] = maxWeight;
  if (ratioSumSq > 0.0) result.diagnostics["ess"] = ratioSum * ratioSum / ratioSumSq;
  return result;
}

PolicyTranscript restrictedPolicyOracle(const Policy& piE, const Dataset& data) {
  PolicyTranscript transcript;
  for (const Trajectory& tau : data.trajectories) {
    std::vector<OaPair> history;
    history.reserve(tau.length());
    for (int h = 0; h < tau.length(); ++h) {
      Vector dist = piE.actionDist(h, history, tau.steps[h].obs);
      for (Eigen::Index a = 0; a < dist.size(); ++a) transcript.entries.push_back(dist[a]);
      history.push_back({tau.steps[h].obs, tau.steps[h].action});
    }
  }
  return transcript;
}

namespace {

constexpr double kVanishTol = 1e-14;

/// Shared C_eff loop. `baseRows` maps the step-t belief into the observable
/// space of M* (emission matrix for single mode, outcome matrix for multi).
/// `tilde` switches the numerator to the memoryless variant with the absolute
/// value outside the history expectation.
double cEffLoop(const TabularPomdp& mStar, const OomModel& oomStar, const OomModel& oomHat,
                const Policy& piE, const Policy& piB,
                const std::vector<Matrix>& baseRows, bool tilde, std::uint64_t cap) {
  const TabularPomdp* models[] = {&mStar};
  const Policy* policies[] = {&piE, &piB};
  double worst = 0.0;
  bool any = false;
  for (int t = 0; t + 1 < mStar.horizon; ++t) {
    double num = 0.0;
    double den = 0.0;
    // Tilde mode accumulates the expected operator-error vector per (o, a).
    std::vector<std::vector<Vector>> acc;
    if (tilde) {
      acc.assign(mStar.obsCounts[t], std::vector<Vector>(mStar.actionCount));
      for (auto& row : acc)
        for (Vector& v : row) v = Vector::Zero(baseRows[t + 1].rows());
    }
    forEachHistory(models, policies, t, cap, [&](const HistoryVisit& visit) {
      double mass = visit.alphas[0].sum();
      if (mass <= 0.0) return;
      double pE = visit.policyWeights[0] * mass;
      double pB = visit.policyWeights[1] * mass;
      if (pE <= 0.0 && pB <= 0.0) return;
      Vector v = baseRows[t] * (visit.alphas[0] / mass);
      for (int o = 0; o < mStar.obsCounts[t]; ++o) {
        for (int a = 0; a < mStar.actionCount; ++a) {
          Vector diff = (oomHat.op(t, o, a) - oomStar.op(t, o, a)) * v;
          double err = diff.cwiseAbs().sum();
          if (tilde)
            acc[o][a] += pE * piE.actionProb(t, visit.history, o, a) * diff;
          else
            num += pE * piE.actionProb(t, visit.history, o, a) * err;
          den += pB * piB.actionProb(t, visit.history, o, a) * err;
        }
      }
    });
    if (tilde)
      for (const auto& row : acc)
        for (const Vector& v : row) num += v.cwiseAbs().sum();
    if (num <= kVanishTol && den <= kVanishTol) continue;  // 0/0 at this step
    any = true;
    worst = std::max(worst, den <= kVanishTol ? kInf : num / den);
  }
  return any ? worst : 1.0;
}

}  // namespace

double cEffSingle(const TabularPomdp& mStar, const TabularPomdp& mHat, const Policy& piE,
                  const Policy& piB, std::uint64_t cap) {
  OomModel oomStar = buildOom(mStar, RevealingMode::Single);
  OomModel oomHat = buildOom(mHat, RevealingMode::Single);
  std::vector<Matrix> base = mStar.emissions;
  return cEffLoop(mStar, oomStar, oomHat, piE, piB, base, false, cap);
}

CEffMultiResult cEffMulti(const TabularPomdp& mStar, const TabularPomdp& mHat,
                          const Policy& piE, const Policy& piB, bool memorylessVariant,
                          std::uint64_t cap) {
  if (!piB.memorylessFlag())
    throw UnsupportedPolicyError("multi-step C_eff requires a memoryless behavior policy");
  OomBuildOptions buildOptions;
  buildOptions.cap = cap;
  OomModel oomStar = buildOom(mStar, RevealingMode::Multi, &piB, buildOptions);
  OomModel oomHat = buildOom(mHat, RevealingMode::Multi, &piB, buildOptions);
  std::vector<Matrix> base;
  base.reserve(mStar.horizon);
  for (int t = 0; t < mStar.horizon; ++t) base.push_back(outcomeMatrix(mStar, piB, t, cap));
  CEffMultiResult result;
  result.cEff = cEffLoop(mStar, oomStar, oomHat, piE, piB, base, false, cap);
  if (memorylessVariant) {
    if (!piE.memorylessFlag())
      throw UnsupportedPolicyError("the tightened coefficient requires a memoryless pi_e");
    result.cEffTilde = cEffLoop(mStar, oomStar, oomHat, piE, piB, base, true, cap);
  }
  return result;
}

double epsApprox(const ModelClass& models, const TabularPomdp& mStar, const Policy& piB,
                 const Dataset& data, const LikelihoodOptions& options) {
  if (models.models.empty()) throw EmptyClassError("model class is empty");
  const double n = static_cast<double>(data.trajectories.size());
  double starLik = logLikelihood(mStar, piB, data, options);
  double best = kInf;
  for (const TabularPomdp& m : models.models)
    best = std::min(best, (starLik - logLikelihood(m, piB, data, options)) / n);
  return best;
}

Vector fdvfConstruct(const TabularPomdp& model, const Policy& piB, const Policy& piE,
                     int step, std::uint64_t cap) {
  if (!piB.memorylessFlag() || !piE.memorylessFlag())
    throw UnsupportedPolicyError("the FDVF construction requires memoryless policies");
  if (step < 0 || step >= model.horizon) throw StructuralError("FDVF step out of range");

  Matrix u = outcomeMatrix(model, piB, step, cap);
  Vector p = latentStateOccupancy(model, piB, step, cap);
  Vector prF = u * p;  // Pr_{pi_b}(f_h)
  const Eigen::Index nf = u.rows();

  // R+(f): the summed reward along the future's observation sequence.
  Vector rPlus(nf);
  for (Eigen::Index f = 0; f < nf; ++f) {
    std::vector<OaPair> future = decodeFuture(model, step, static_cast<std::uint64_t>(f));
    double r = 0.0;
    for (std::size_t k = 0; k < future.size(); ++k)
      r += model.reward(step + static_cast<int>(k), future[k].obs);
    rPlus[f] = r;
    if (prF[f] > 0.0 && r <= 0.0)
      throw DegenerateWeightError("future " + std::to_string(f) +
                                  " is reachable but has zero return");
  }

  // Sigma^{R,p} = diag(p) U^T (Z^{R,p})^{-1} U with (Z^{R,p})^{-1}(f) = R+(f)/Pr(f).
  const Eigen::Index s = u.cols();
  Matrix sigma = Matrix::Zero(s, s);
  for (Eigen::Index f = 0; f < nf; ++f) {
    if (prF[f] <= 0.0) continue;
    sigma.noalias() += (rPlus[f] / prF[f]) * u.row(f).transpose() * u.row(f);
  }
  sigma = p.asDiagonal() * sigma;
  Eigen::FullPivLU<Matrix> lu(sigma.transpose());
  if (!lu.isInvertible()) throw RevealingViolationError("Sigma^{R,p} is singular", step);

  Vector vS = latentValue(model, piE, step);
  Vector y = u * (p.asDiagonal() * lu.solve(vS));
  Vector vF = Vector::Zero(nf);
  for (Eigen::Index f = 0; f < nf; ++f)
    if (prF[f] > 0.0) vF[f] = (rPlus[f] / prF[f]) * y[f];
  return vF;
}

double trajectoryTotalVariation(const TabularPomdp& a, const TabularPomdp& b,
                                const Policy& pi, std::uint64_t cap) {
  if (a.horizon != b.horizon || a.obsCounts != b.obsCounts || a.actionCount != b.actionCount)
    throw StructuralError("TV distance needs models over the same observable spaces");
  const TabularPomdp* models[] = {&a, &b};
  const Policy* policies[] = {&pi};
  double tv = 0.0;
  forEachTrajectory(models, policies, cap, [&](const TrajectoryVisit& v) {
    tv += std::abs(v.envProbs[0] - v.envProbs[1]) * v.policyWeights[0];
  });
  return 0.5 * tv;
}

}  // namespace pomdpope
