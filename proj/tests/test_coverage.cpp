#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace pomdpope;
using pomdpope::testing::smallRandomInstance;

namespace {

// Probability of a complete future (o, a, ..., o_H) starting from `state`,
// computed by direct recursion independent of outcomeMatrix.
double futureProbOracle(const TabularPomdp& m, const Policy& piB, int step, int state,
                        std::span<const OaPair> future) {
  const OaPair& head = future.front();
  double po = m.emissions[step](head.obs, state);
  if (future.size() == 1) return po;
  double pa = piB.actionProb(step, {}, head.obs, head.action);
  double total = 0.0;
  for (int next = 0; next < m.stateCounts[step + 1]; ++next)
    total += m.transitions[step][head.action](next, state) *
             futureProbOracle(m, piB, step + 1, next, future.subspan(1));
  return po * pa * total;
}

}  // namespace

TEST_CASE("C_A is the worst inverse action probability") {
  TabularPomdp m = smallRandomInstance(31);
  CHECK(computeCA(m, Policy::uniformMemoryless(m)) == doctest::Approx(2.0));
  Policy deterministic = Policy::openLoop({0, 0, 0});
  CHECK(std::isinf(computeCA(m, deterministic)));
  Policy skewed = randomMemorylessPolicy(m, 32, 0.5);
  double cA = computeCA(m, skewed);
  CHECK(cA >= 2.0);
  CHECK(cA <= 4.0 + 1e-12);  // mixing 50% uniform keeps probabilities >= 1/4
}

TEST_CASE("Sigma_O flags uninformative emissions and passes identity ones") {
  TabularPomdp m;
  m.horizon = 2;
  m.stateCounts = {2, 2};
  m.actionCount = 1;
  m.obsCounts = {2, 2};
  m.initialDist = Vector::Constant(2, 0.5);
  m.transitions = {{Matrix::Identity(2, 2)}};
  m.emissions = {Matrix::Constant(2, 2, 0.5), Matrix::Identity(2, 2)};
  m.rewards = {{0.0, 0.0}, {0.0, 1.0}};
  m.validate();
  SigmaResult uninformative = sigmaObs(m, 0);
  CHECK(uninformative.sigma(0, 0) == doctest::Approx(0.5));
  CHECK(uninformative.sigma(0, 1) == doctest::Approx(0.5));
  CHECK(std::isinf(uninformative.coefficient));
  CHECK(sigmaObs(m, 1).coefficient == doctest::Approx(1.0));
}

TEST_CASE("Sigma_H on an MDP embedding reduces to transition columns") {
  TabularPomdp m = smallRandomInstance(33, 3, 3, 3, 2);
  TabularPomdp mdp = mdpEmbed(m.transitions, m.rewards, m.initialDist);
  Policy piB = randomMemorylessPolicy(mdp, 34, 0.3);
  // The belief over S_h conditions on the history through step h-1 only, and
  // identity emissions reveal s_{h-1}: each belief is a transition column,
  // weighted by the (s, a) occupancy one step earlier.
  for (int h = 0; h + 1 < mdp.horizon; ++h) {
    SigmaResult sigma = sigmaHistory(mdp, piB, h);
    Matrix expected = Matrix::Zero(mdp.stateCounts[h], mdp.stateCounts[h]);
    if (h == 0) {
      expected = mdp.initialDist * mdp.initialDist.transpose();
    } else {
      Matrix occ = latentOccupancy(mdp, piB, h - 1);
      for (Eigen::Index s = 0; s < occ.rows(); ++s)
        for (Eigen::Index a = 0; a < occ.cols(); ++a) {
          Vector b = mdp.transitions[h - 1][a].col(s);
          expected += occ(s, a) * b * b.transpose();
        }
    }
    CHECK((sigma.sigma - expected).cwiseAbs().maxCoeff() < 1e-10);
    if (std::isfinite(sigma.coefficient)) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(expected, Eigen::EigenvaluesOnly);
      CHECK(sigma.coefficient ==
            doctest::Approx(1.0 / eig.eigenvalues().minCoeff()).epsilon(1e-6));
    }
  }
}

TEST_CASE("Monte Carlo Sigma_H approximates the exact matrix") {
  TabularPomdp m = smallRandomInstance(35, 3, 2, 3, 2);
  Policy piB = randomMemorylessPolicy(m, 36, 0.3);
  SigmaResult exact = sigmaHistory(m, piB, 2);
  SigmaResult mc = sigmaHistoryMonteCarlo(m, piB, 2, 40000, 37);
  CHECK(mc.monteCarlo);
  CHECK((exact.sigma - mc.sigma).cwiseAbs().maxCoeff() < 0.02);
  SigmaResult serial = sigmaHistoryMonteCarloSerial(m, piB, 2, 40000, 37);
  CHECK(mc.sigma == serial.sigma);
}

TEST_CASE("outcome matrix matches the future-probability oracle") {
  TabularPomdp m = smallRandomInstance(38, 3, 2, 2, 2);
  Policy piB = randomMemorylessPolicy(m, 39, 0.2);
  for (int step = 0; step < m.horizon; ++step) {
    Matrix u = outcomeMatrix(m, piB, step);
    CHECK(static_cast<std::uint64_t>(u.rows()) == futureCount(m, step));
    for (int s = 0; s < m.stateCounts[step]; ++s)
      CHECK(u.col(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index f = 0; f < u.rows(); ++f) {
      std::vector<OaPair> future = decodeFuture(m, step, static_cast<std::uint64_t>(f));
      for (int s = 0; s < m.stateCounts[step]; ++s)
        CHECK(u(f, s) ==
              doctest::Approx(futureProbOracle(m, piB, step, s, future)).epsilon(1e-11));
    }
  }
  CHECK(outcomeMatrix(m, piB, m.horizon - 1) == m.emissions[m.horizon - 1]);
  Policy history = Policy::historyTable(2, Vector::Constant(2, 0.5), {});
  CHECK_THROWS_AS(outcomeMatrix(m, history, 0), UnsupportedPolicyError);
}

TEST_CASE("future coefficients are finite on revealing instances") {
  TabularPomdp m = smallRandomInstance(40, 3, 2, 3, 2, RandomRevealing::Single);
  Policy piB = Policy::uniformMemoryless(m);
  for (int h = 0; h + 1 < m.horizon; ++h) {
    CHECK(std::isfinite(sigmaObs(m, h).coefficient));
    CHECK(std::isfinite(sigmaFuture(m, piB, h).coefficient));
    CHECK(std::isfinite(sigmaFutureWeighted(m, piB, h).coefficient));
  }
}

TEST_CASE("weighted Sigma_F rejects degenerate occupancy priors") {
  // State 1 at step 1 is unreachable.
  TabularPomdp m;
  m.horizon = 2;
  m.stateCounts = {1, 2};
  m.actionCount = 1;
  m.obsCounts = {1, 2};
  m.initialDist = Vector::Ones(1);
  Matrix t(2, 1);
  t << 1.0, 0.0;
  m.transitions = {{t}};
  m.emissions = {Matrix::Ones(1, 1), Matrix::Identity(2, 2)};
  m.rewards = {{0.0}, {1.0, 0.0}};
  m.validate();
  CHECK_THROWS_AS(sigmaFutureWeighted(m, Policy::uniformMemoryless(m), 1),
                  DegeneratePriorError);
}

TEST_CASE("prefilter keeps everything at infinite threshold and empties the knife-edge class") {
  HardnessBundle bundle = theorem6Instance(5, false);
  std::vector<const TabularPomdp*> models = {&bundle.modelClass.models[0],
                                             &bundle.modelClass.models[1]};
  CHECK(prefilter(models, bundle.behaviorPolicy, RevealingMode::Single, kInf).size() == 2);
  CHECK(prefilter(models, bundle.behaviorPolicy, RevealingMode::Single, 1e6).empty());
  CHECK_THROWS_AS(prefilter(models, bundle.behaviorPolicy, RevealingMode::Single, -1.0),
                  ParameterError);
  Policy history = Policy::historyTable(2, Vector::Constant(2, 0.5), {});
  CHECK_THROWS_AS(prefilter(models, history, RevealingMode::Multi, 10.0),
                  UnsupportedPolicyError);
}

TEST_CASE("coverage report assembles per-step vectors") {
  TabularPomdp m = smallRandomInstance(41, 3, 2, 3, 2, RandomRevealing::Single);
  Policy piB = randomMemorylessPolicy(m, 42, 0.4);
  CoverageOptions options;
  options.multi = true;
  options.weighted = true;
  CoverageReport report = coverageReport(m, piB, options);
  CHECK(report.cH.size() == 2);
  CHECK(report.cO.size() == 2);
  CHECK(report.cF.size() == 2);
  CHECK(report.cFWeighted.size() == 2);
  CHECK(std::isfinite(report.cA));
  for (double c : report.cO) CHECK(std::isfinite(c));
}
