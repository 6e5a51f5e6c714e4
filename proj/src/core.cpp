#include "pomdpope/core.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pomdpope {

TrajectoryProb trajectoryProb(const TabularPomdp& model, const Policy& pi,
                              const Trajectory& tau, int upToStep) {
  tau.validateAgainst(model);
  if (upToStep < 0 || upToStep > model.horizon)
    throw StructuralError("upToStep out of range");
  TrajectoryProb result;
  result.environment = 1.0;
  result.policy = 1.0;
  Vector alpha = model.initialDist;
  std::vector<OaPair> history;
  history.reserve(upToStep);
  for (int h = 0; h < upToStep; ++h) {
    const StepRecord& s = tau.steps[h];
    Vector beta = model.emissions[h].row(s.obs).transpose().cwiseProduct(alpha);
    result.policy *= pi.actionProb(h, history, s.obs, s.action);
    history.push_back({s.obs, s.action});
    if (h + 1 < model.horizon) {
      alpha.noalias() = model.transitions[h][s.action] * beta;
    } else {
      alpha = beta;
    }
    if (alpha.sum() <= 0.0 && result.policy == 0.0) break;  // both factors settled
  }
  result.environment = alpha.sum();
  if (upToStep == 0) result.environment = 1.0;
  return result;
}

BeliefVector beliefState(const TabularPomdp& model, HistoryView history) {
  const int h = static_cast<int>(history.size());
  if (h > model.horizon - 1) throw StructuralError("history longer than H-1 steps");
  Vector alpha = model.initialDist;
  for (int t = 0; t < h; ++t) {
    const OaPair& oa = history[t];
    if (oa.obs < 0 || oa.obs >= model.obsCounts[t] || oa.action < 0 ||
        oa.action >= model.actionCount)
      throw StructuralError("history index out of range at step " + std::to_string(t));
    Vector beta = model.emissions[t].row(oa.obs).transpose().cwiseProduct(alpha);
    alpha.noalias() = model.transitions[t][oa.action] * beta;
  }
  double mass = alpha.sum();
  if (mass <= 0.0)
    throw ZeroProbabilityHistoryError("belief state undefined on zero-probability history");
  return {h, alpha / mass};
}

double policyValueExact(const TabularPomdp& model, const Policy& pi, std::uint64_t cap) {
  const TabularPomdp* models[] = {&model};
  const Policy* policies[] = {&pi};
  double value = 0.0;
  forEachTrajectory(models, policies, cap, [&](const TrajectoryVisit& v) {
    double ret = 0.0;
    for (std::size_t t = 0; t < v.trajectory.size(); ++t)
      ret += model.reward(static_cast<int>(t), v.trajectory[t].obs);
    value += v.envProbs[0] * v.policyWeights[0] * ret;
  });
  return value;
}

Trajectory sampleTrajectory(const TabularPomdp& model, const Policy& pi, Rng& rng) {
  Trajectory tau;
  tau.steps.reserve(model.horizon);
  std::vector<OaPair> history;
  history.reserve(model.horizon);
  int state = rng.nextCategorical(model.initialDist);
  for (int h = 0; h < model.horizon; ++h) {
    int obs = rng.nextCategorical(model.emissions[h].col(state));
    Vector dist = pi.actionDist(h, history, obs);
    int action = rng.nextCategorical(dist);
    tau.steps.push_back({obs, action, model.reward(h, obs)});
    history.push_back({obs, action});
    if (h + 1 < model.horizon) state = rng.nextCategorical(model.transitions[h][action].col(state));
  }
  return tau;
}

namespace {

Dataset sampleDatasetImpl(const TabularPomdp& model, const Policy& pi, std::uint64_t n,
                          std::uint64_t seed, bool parallel) {
  Dataset data;
  data.seed = seed;
  data.behaviorPolicyId = pi.id;
  data.trajectories.resize(n);
  const auto body = [&](std::int64_t i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    data.trajectories[i] = sampleTrajectory(model, pi, rng);
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) body(i);
  }
  return data;
}

}  // namespace

Dataset sampleDataset(const TabularPomdp& model, const Policy& pi, std::uint64_t n,
                      std::uint64_t seed) {
  return sampleDatasetImpl(model, pi, n, seed, true);
}

Dataset sampleDatasetSerial(const TabularPomdp& model, const Policy& pi, std::uint64_t n,
                            std::uint64_t seed) {
  return sampleDatasetImpl(model, pi, n, seed, false);
}

MonteCarloEstimate policyValueMonteCarlo(const TabularPomdp& model, const Policy& pi,
                                         std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) throw ParameterError("Monte Carlo mode needs a positive sample count");
  std::vector<double> returns(samples);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples); ++i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    returns[i] = sampleTrajectory(model, pi, rng).totalReturn();
  }
  // Index-ordered reduction keeps the result independent of thread count.
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= std::max<double>(1.0, static_cast<double>(samples) - 1.0);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

Matrix latentOccupancy(const TabularPomdp& model, const Policy& pi, int step,
                       std::uint64_t cap) {
  if (step < 0 || step >= model.horizon) throw StructuralError("occupancy step out of range");
  Matrix occ = Matrix::Zero(model.stateCounts[step], model.actionCount);
  if (pi.kind() == Policy::Kind::HistoryTable) {
    const TabularPomdp* models[] = {&model};
    const Policy* policies[] = {&pi};
    forEachHistory(models, policies, step, cap, [&](const HistoryVisit& v) {
      const Vector& alpha = v.alphas[0];
      for (int o = 0; o < model.obsCounts[step]; ++o) {
        Vector dist;
        bool haveDist = false;
        for (int s = 0; s < model.stateCounts[step]; ++s) {
          double w = v.policyWeights[0] * alpha[s] * model.emissions[step](o, s);
          if (w == 0.0) continue;
          if (!haveDist) {
            dist = pi.actionDist(step, v.history, o);
            haveDist = true;
          }
          occ.row(s) += w * dist.transpose();
        }
      }
    });
    return occ;
  }
  // Memoryless / open-loop: exact forward recursion over states.
  Vector d = model.initialDist;
  for (int h = 0; h < step; ++h) {
    Matrix stepOcc = Matrix::Zero(model.stateCounts[h], model.actionCount);
    for (int s = 0; s < model.stateCounts[h]; ++s)
      for (int o = 0; o < model.obsCounts[h]; ++o) {
        double po = model.emissions[h](o, s);
        if (po == 0.0) continue;
        for (int a = 0; a < model.actionCount; ++a)
          stepOcc(s, a) += d[s] * po * pi.actionProb(h, {}, o, a);
      }
    Vector next = Vector::Zero(model.stateCounts[h + 1]);
    for (int a = 0; a < model.actionCount; ++a)
      next.noalias() += model.transitions[h][a] * stepOcc.col(a);
    d = next;
  }
  for (int s = 0; s < model.stateCounts[step]; ++s)
    for (int o = 0; o < model.obsCounts[step]; ++o) {
      double po = model.emissions[step](o, s);
      if (po == 0.0) continue;
      for (int a = 0; a < model.actionCount; ++a)
        occ(s, a) += d[s] * po * pi.actionProb(step, {}, o, a);
    }
  return occ;
}

Vector latentStateOccupancy(const TabularPomdp& model, const Policy& pi, int step,
                            std::uint64_t cap) {
  return latentOccupancy(model, pi, step, cap).rowwise().sum();
}

Vector latentValue(const TabularPomdp& model, const Policy& piE, int step) {
  if (!piE.memorylessFlag())
    throw UnsupportedPolicyError("latent value function is defined only for memoryless policies");
  if (step < 0 || step >= model.horizon) throw StructuralError("value step out of range");
  Vector next = Vector::Zero(model.stateCounts[model.horizon - 1]);
  for (int h = model.horizon - 1; h >= step; --h) {
    Vector v = Vector::Zero(model.stateCounts[h]);
    for (int s = 0; s < model.stateCounts[h]; ++s) {
      for (int o = 0; o < model.obsCounts[h]; ++o) {
        double po = model.emissions[h](o, s);
        if (po == 0.0) continue;
        double contrib = model.reward(h, o);
        if (h + 1 < model.horizon) {
          for (int a = 0; a < model.actionCount; ++a) {
            double pa = piE.actionProb(h, {}, o, a);
            if (pa == 0.0) continue;
            contrib += pa * model.transitions[h][a].col(s).dot(next);
          }
        }
        v[s] += po * contrib;
      }
    }
    next = v;
  }
  return next;
}

Trajectory sampleFutureFromState(const TabularPomdp& model, const Policy& pi, int step,
                                 int state, Rng& rng) {
  Trajectory tau;
  std::vector<OaPair> history;  // the forced prefix is absent; memoryless policies only
  if (!pi.memorylessFlag())
    throw UnsupportedPolicyError("conditional rollout requires a memoryless policy");
  for (int h = step; h < model.horizon; ++h) {
    int obs = rng.nextCategorical(model.emissions[h].col(state));
    Vector dist = pi.actionDist(h, history, obs);
    int action = rng.nextCategorical(dist);
    tau.steps.push_back({obs, action, model.reward(h, obs)});
    if (h + 1 < model.horizon) state = rng.nextCategorical(model.transitions[h][action].col(state));
  }
  return tau;
}

}  // namespace pomdpope
