#include "pomdpope/coverage.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace pomdpope {

double matrixL1Norm(const Matrix& m) {
  if (m.size() == 0) throw StructuralError("l1 norm of an empty matrix");
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

namespace {

// All Sigma matrices here are symmetric, so eigenvalue magnitudes are the
// singular values; the self-adjoint solver scales to the larger instances.
bool effectivelySingular(const Matrix& sym, double& sigmaMin, double& sigmaMax) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  Vector mags = eig.eigenvalues().cwiseAbs();
  sigmaMax = mags.maxCoeff();
  sigmaMin = mags.minCoeff();
  if (sigmaMin <= 0.0) return true;
  if (sigmaMin < 1e-12 * sigmaMax) return true;
  if (sigmaMax / sigmaMin > kConditionCutoff) return true;
  return false;
}

double inverseL1OrInf(const Matrix& sigma) {
  double smin, smax;
  if (effectivelySingular(sigma, smin, smax)) return kInf;
  Matrix inv = sigma.fullPivLu().inverse();
  return matrixL1Norm(inv);
}

/// Sigma = diag(left) * U^T * diag(1/rowMass) * U over the rows with positive
/// mass. `left` may be empty (identity).
Matrix weightedGram(const Matrix& u, const Vector& rowMass, const Vector* left) {
  const Eigen::Index s = u.cols();
  Matrix sigma = Matrix::Zero(s, s);
  for (Eigen::Index f = 0; f < u.rows(); ++f) {
    if (rowMass[f] <= 0.0) continue;  // zero rows dropped before forming the weight
    sigma.noalias() += u.row(f).transpose() * u.row(f) / rowMass[f];
  }
  if (left != nullptr) sigma = left->asDiagonal() * sigma;
  return sigma;
}

}  // namespace

double computeCA(const TabularPomdp& model, const Policy& piB, std::uint64_t cap) {
  const TabularPomdp* models[] = {&model};
  const Policy* policies[] = {&piB};
  double worst = 0.0;
  bool infinite = false;
  for (int step = 0; step < model.horizon && !infinite; ++step) {
    forEachHistory(models, policies, step, cap, [&](const HistoryVisit& v) {
      if (infinite) return;
      double histProb = v.policyWeights[0] * v.alphas[0].sum();
      if (histProb <= 0.0) return;
      for (int o = 0; o < model.obsCounts[step]; ++o) {
        double po = model.emissions[step].row(o).dot(v.alphas[0]);
        if (po <= 0.0) continue;
        Vector dist = piB.actionDist(step, v.history, o);
        for (int a = 0; a < model.actionCount; ++a) {
          if (dist[a] <= 0.0) {
            infinite = true;
            return;
          }
          worst = std::max(worst, 1.0 / dist[a]);
        }
      }
    });
  }
  return infinite ? kInf : worst;
}

SigmaResult sigmaHistory(const TabularPomdp& model, const Policy& piB, int step,
                         std::uint64_t cap) {
  if (step < 0 || step > model.horizon - 1) throw StructuralError("sigma_history step out of range");
  const TabularPomdp* models[] = {&model};
  const Policy* policies[] = {&piB};
  Matrix sigma = Matrix::Zero(model.stateCounts[step], model.stateCounts[step]);
  forEachHistory(models, policies, step, cap, [&](const HistoryVisit& v) {
    double mass = v.alphas[0].sum();
    double weight = v.policyWeights[0] * mass;
    if (weight <= 0.0) return;  // zero-probability histories contribute nothing
    Vector belief = v.alphas[0] / mass;
    sigma.noalias() += weight * belief * belief.transpose();
  });
  SigmaResult result;
  result.sigma = sigma;
  double smin, smax;
  result.coefficient = effectivelySingular(sigma, smin, smax) ? kInf : 1.0 / smin;
  return result;
}

namespace {

SigmaResult sigmaHistoryMcImpl(const TabularPomdp& model, const Policy& piB, int step,
                               std::uint64_t mcSamples, std::uint64_t seed, bool parallel) {
  if (mcSamples == 0) throw ParameterError("Monte Carlo Sigma_H needs a positive sample count");
  const int s = model.stateCounts[step];
  std::vector<Matrix> terms(mcSamples);
  const auto body = [&](std::int64_t i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    Trajectory tau = sampleTrajectory(model, piB, rng);
    std::vector<OaPair> prefix;
    prefix.reserve(step);
    for (int t = 0; t < step; ++t) prefix.push_back({tau.steps[t].obs, tau.steps[t].action});
    Vector b = beliefState(model, prefix).values;
    terms[i] = b * b.transpose();
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(mcSamples); ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(mcSamples); ++i) body(i);
  }
  Matrix sigma = Matrix::Zero(s, s);
  for (const Matrix& t : terms) sigma += t;  // index order: thread-count independent
  sigma /= static_cast<double>(mcSamples);
  SigmaResult result;
  result.sigma = sigma;
  result.monteCarlo = true;
  double smin, smax;
  result.coefficient = effectivelySingular(sigma, smin, smax) ? kInf : 1.0 / smin;
  return result;
}

}  // namespace

SigmaResult sigmaHistoryMonteCarlo(const TabularPomdp& model, const Policy& piB, int step,
                                   std::uint64_t mcSamples, std::uint64_t seed) {
  return sigmaHistoryMcImpl(model, piB, step, mcSamples, seed, true);
}

SigmaResult sigmaHistoryMonteCarloSerial(const TabularPomdp& model, const Policy& piB, int step,
                                         std::uint64_t mcSamples, std::uint64_t seed) {
  return sigmaHistoryMcImpl(model, piB, step, mcSamples, seed, false);
}

Matrix outcomeMatrix(const TabularPomdp& model, const Policy& piB, int step, std::uint64_t cap) {
  if (!piB.memorylessFlag())
    throw UnsupportedPolicyError(
        "outcome matrix P(f_h | s_h) is well defined only for memoryless behavior policies");
  if (step < 0 || step >= model.horizon) throw StructuralError("outcome matrix step out of range");
  std::uint64_t required = futureCount(model, step);
  if (required > cap) throw CapacityError("future enumeration", required, cap);

  Matrix u = model.emissions[model.horizon - 1];  // U at the final step is the emission matrix
  for (int t = model.horizon - 2; t >= step; --t) {
    const Eigen::Index nf = u.rows();
    Matrix next(static_cast<Eigen::Index>(model.obsCounts[t]) * model.actionCount * nf,
                model.stateCounts[t]);
    for (int o = 0; o < model.obsCounts[t]; ++o) {
      Vector emit = model.emissions[t].row(o).transpose();
      for (int a = 0; a < model.actionCount; ++a) {
        double pa = piB.actionProb(t, {}, o, a);
        Eigen::Index base = (static_cast<Eigen::Index>(o) * model.actionCount + a) * nf;
        next.middleRows(base, nf).noalias() =
            (u * model.transitions[t][a]) * (pa * emit).asDiagonal();
      }
    }
    u = std::move(next);
  }
  return u;
}

SigmaResult sigmaObs(const TabularPomdp& model, int step) {
  const Matrix& o = model.emissions[step];
  Vector rowMass = o.rowwise().sum();
  SigmaResult result;
  result.sigma = weightedGram(o, rowMass, nullptr);
  result.coefficient = inverseL1OrInf(result.sigma);
  return result;
}

SigmaResult sigmaFuture(const TabularPomdp& model, const Policy& piB, int step,
                        std::uint64_t cap) {
  Matrix u = outcomeMatrix(model, piB, step, cap);
  Vector rowMass = u.rowwise().sum();
  SigmaResult result;
  result.sigma = weightedGram(u, rowMass, nullptr);
  result.coefficient = inverseL1OrInf(result.sigma);
  return result;
}

SigmaResult sigmaFutureWeighted(const TabularPomdp& model, const Policy& piB, int step,
                                std::uint64_t cap) {
  Vector p = latentStateOccupancy(model, piB, step, cap);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] <= 0.0)
      throw DegeneratePriorError("occupancy prior has a zero entry at state " + std::to_string(i));
  Matrix u = outcomeMatrix(model, piB, step, cap);
  Vector rowMass = u * p;  // Z^p(f) = Pr_{pi_b}(f)
  SigmaResult result;
  result.sigma = weightedGram(u, rowMass, &p);
  result.coefficient = inverseL1OrInf(result.sigma);
  return result;
}

CoverageReport coverageReport(const TabularPomdp& model, const Policy& piB,
                              const CoverageOptions& options) {
  CoverageReport report;
  report.cA = computeCA(model, piB, options.cap);
  const int steps = model.horizon - 1;
  if (options.history) {
    report.cHMonteCarlo = options.mcSamples > 0;
    for (int h = 0; h < steps; ++h)
      report.cH.push_back(report.cHMonteCarlo
                              ? sigmaHistoryMonteCarlo(model, piB, h, options.mcSamples,
                                                       options.seed)
                                    .coefficient
                              : sigmaHistory(model, piB, h, options.cap).coefficient);
  }
  if (options.single)
    for (int h = 0; h < steps; ++h) report.cO.push_back(sigmaObs(model, h).coefficient);
  if (options.multi)
    for (int h = 0; h < steps; ++h)
      report.cF.push_back(sigmaFuture(model, piB, h, options.cap).coefficient);
  if (options.weighted)
    for (int h = 0; h < steps; ++h)
      report.cFWeighted.push_back(sigmaFutureWeighted(model, piB, h, options.cap).coefficient);
  return report;
}

std::vector<const TabularPomdp*> prefilter(std::span<const TabularPomdp* const> models,
                                           const Policy& piB, RevealingMode mode,
                                           double threshold, std::uint64_t cap) {
  if (!(threshold > 0.0)) throw ParameterError("pre-filtering threshold must be positive");
  if (mode == RevealingMode::Multi && !piB.memorylessFlag())
    throw UnsupportedPolicyError("multi-step pre-filtering requires a memoryless behavior policy");
  std::vector<const TabularPomdp*> kept;
  for (const TabularPomdp* m : models) {
    bool survives = true;
    for (int h = 0; h < m->horizon - 1 && survives; ++h) {
      double c = mode == RevealingMode::Single ? sigmaObs(*m, h).coefficient
                                               : sigmaFuture(*m, piB, h, cap).coefficient;
      if (!(c <= threshold)) survives = false;
    }
    if (survives) kept.push_back(m);
  }
  return kept;
}

}  // namespace pomdpope
