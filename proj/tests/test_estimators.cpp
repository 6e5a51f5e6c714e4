#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace pomdpope;
using pomdpope::testing::bruteForceProb;
using pomdpope::testing::smallRandomInstance;

TEST_CASE("log likelihood of a deterministic-observation trajectory") {
  // On the branch chain under the uniform policy, every trajectory has
  // environment probability 1 and policy probability 2^-H.
  const int horizon = 6;
  HardnessBundle bundle = theorem3Instance(horizon, false);
  Policy uniform = bundle.behaviorPolicy;
  Rng rng = Rng::substream(71, 0);
  Dataset data;
  data.trajectories.push_back(sampleTrajectory(bundle.trueModel, uniform, rng));
  CHECK(logLikelihood(bundle.trueModel, uniform, data) ==
        doctest::Approx(-horizon * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("log likelihood matches the per-trajectory oracle") {
  TabularPomdp m = smallRandomInstance(72, 4, 3, 2, 2);
  Policy piB = randomMemorylessPolicy(m, 73, 0.2);
  Dataset data = sampleDataset(m, piB, 200, 74);
  double expected = 0.0;
  for (const Trajectory& tau : data.trajectories)
    expected += std::log(bruteForceProb(m, piB, tau));
  CHECK(logLikelihood(m, piB, data) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(logLikelihood(m, piB, data) == logLikelihoodSerial(m, piB, data));
}

TEST_CASE("zero-likelihood trajectories are reported or floored") {
  TabularPomdp m = smallRandomInstance(75);
  Policy piB = Policy::uniformMemoryless(m);
  Dataset data = sampleDataset(m, piB, 5, 76);
  // An out-of-model observation at the last step: force an impossible record
  // by evaluating under a model whose emission forbids it.
  TabularPomdp forbidding = m;
  int obs = data.trajectories[2].steps[0].obs;
  forbidding.emissions[0].row(obs).setZero();
  // Renormalize columns so the model stays valid.
  for (int s = 0; s < forbidding.stateCounts[0]; ++s)
    forbidding.emissions[0].col(s) /= forbidding.emissions[0].col(s).sum();
  forbidding.validate();
  std::size_t firstBad = 0;
  while (data.trajectories[firstBad].steps[0].obs != obs) ++firstBad;
  try {
    logLikelihood(forbidding, piB, data);
    FAIL("expected a zero-likelihood error");
  } catch (const ZeroLikelihoodError& e) {
    CHECK(std::string(e.what()).find(std::to_string(firstBad)) != std::string::npos);
  }
  LikelihoodOptions floor;
  floor.floorMode = true;
  CHECK(std::isfinite(logLikelihood(forbidding, piB, data, floor)));
}

TEST_CASE("MLE selection picks the true model and breaks ties low") {
  TabularPomdp m = smallRandomInstance(77, 3, 2, 3, 2, RandomRevealing::Single);
  Policy piB = Policy::uniformMemoryless(m);
  // Corrupt an emission column: the difference is directly observable, so a
  // few thousand samples identify the true model reliably.
  TabularPomdp corrupted = m;
  Vector col = corrupted.emissions[1].col(0);
  Vector spike = Vector::Zero(col.size());
  spike[0] = 1.0;
  corrupted.emissions[1].col(0) = 0.7 * col + 0.3 * spike;
  corrupted.validate();
  int correct = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset data = sampleDataset(m, piB, 4000, 1000 + seed);
    const TabularPomdp* models[] = {&corrupted, &m};
    if (mleSelect(models, piB, data) == 1) ++correct;
  }
  CHECK(correct >= 4);
  // Identical models tie; the lowest index wins.
  const TabularPomdp* twins[] = {&m, &m};
  Dataset data = sampleDataset(m, piB, 100, 78);
  CHECK(mleSelect(twins, piB, data) == 0);
  CHECK_THROWS_AS(mleSelect(std::span<const TabularPomdp* const>{}, piB, data),
                  EmptyClassError);
}

TEST_CASE("model-based OPE is exact on the branch chain") {
  HardnessBundle bundle = theorem3Instance(6, false);
  Dataset data = sampleDataset(bundle.trueModel, bundle.behaviorPolicy, 200, 79);
  OpeOptions options;
  OpeResult r1 = modelBasedOpe(bundle.modelClass, bundle.behaviorPolicy,
                               bundle.targetPolicies[0], data, options);
  CHECK(r1.estimate == 1.0);
  CHECK(r1.method == "model-based-mle");
  CHECK(*r1.selectedModelIndex == 0);
  CHECK(r1.diagnostics.at("abs_error") == 0.0);
  OpeResult r2 = modelBasedOpe(bundle.modelClass, bundle.behaviorPolicy,
                               bundle.targetPolicies[1], data, options);
  CHECK(r2.estimate == 0.0);
}

TEST_CASE("knife-edge class empties under single-mode pre-filtering") {
  HardnessBundle bundle = theorem6Instance(5, false);
  Dataset data = sampleDataset(bundle.trueModel, bundle.behaviorPolicy, 100, 80);
  OpeOptions options;
  options.threshold = 1e6;
  CHECK_THROWS_AS(modelBasedOpe(bundle.modelClass, bundle.behaviorPolicy,
                                bundle.targetPolicies[0], data, options),
                  EmptyClassError);
}

TEST_CASE("importance sampling reduces to the sample mean on-policy") {
  TabularPomdp m = smallRandomInstance(81, 3, 2, 3, 2);
  Policy piB = randomMemorylessPolicy(m, 82, 0.3);
  Dataset data = sampleDataset(m, piB, 300, 83);
  double mean = 0.0;
  for (const Trajectory& tau : data.trajectories) mean += tau.totalReturn();
  mean /= static_cast<double>(data.trajectories.size());
  OpeResult r = importanceSamplingOpe(data, piB, piB);
  CHECK(r.estimate == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.method == "importance-sampling");

  // A disagreeing deterministic target zeroes the single-trajectory estimate.
  Dataset one;
  one.trajectories.push_back(data.trajectories[0]);
  std::vector<int> disagree;
  for (const StepRecord& s : one.trajectories[0].steps) disagree.push_back(1 - s.action);
  if (one.trajectories[0].steps[0].action == disagree[0]) disagree[0] = 1 - disagree[0];
  OpeResult zero = importanceSamplingOpe(one, Policy::openLoop(disagree), piB);
  CHECK(zero.estimate == 0.0);

  Policy deterministic = Policy::openLoop({0, 0, 0});
  bool tookOne = false;
  for (const Trajectory& tau : data.trajectories)
    for (const StepRecord& s : tau.steps) tookOne |= s.action == 1;
  REQUIRE(tookOne);
  CHECK_THROWS_AS(importanceSamplingOpe(data, piB, deterministic), ParameterError);
}

TEST_CASE("restricted policy oracle transcripts") {
  HardnessBundle bundle = theorem3Instance(5, false);
  Dataset empty;
  CHECK(restrictedPolicyOracle(bundle.targetPolicies[0], empty).entries.empty());

  // Without the all-L action prefix the two targets are indistinguishable.
  Policy alwaysR = Policy::openLoop({1, 1, 1, 1, 1});
  Dataset data = sampleDataset(bundle.trueModel, alwaysR, 50, 84);
  CHECK(restrictedPolicyOracle(bundle.targetPolicies[0], data) ==
        restrictedPolicyOracle(bundle.targetPolicies[1], data));

  Policy alwaysL = Policy::openLoop({0, 0, 0, 0, 0});
  Dataset revealing = sampleDataset(bundle.trueModel, alwaysL, 1, 85);
  CHECK_FALSE(restrictedPolicyOracle(bundle.targetPolicies[0], revealing) ==
              restrictedPolicyOracle(bundle.targetPolicies[1], revealing));
}

TEST_CASE("C_eff conventions") {
  TabularPomdp m = smallRandomInstance(86, 3, 2, 3, 2, RandomRevealing::Single);
  Policy piB = randomMemorylessPolicy(m, 87, 0.3);
  Policy piE = randomMemorylessPolicy(m, 88, 0.3);
  CHECK(cEffSingle(m, m, piE, piB) == 1.0);  // 0/0 convention
  TabularPomdp mHat = smallRandomInstance(89, 3, 2, 3, 2, RandomRevealing::Single);
  CHECK(cEffSingle(m, mHat, piB, piB) == doctest::Approx(1.0).epsilon(1e-9));
  double cEff = cEffSingle(m, mHat, piE, piB);
  double bound = computeCA(m, piB);
  double cH = 0.0;
  for (int h = 0; h + 1 < m.horizon; ++h)
    cH = std::max(cH, sigmaHistory(m, piB, h).coefficient);
  CHECK(cEff <= bound * cH + 1e-6);
}

TEST_CASE("multi-step C_eff and its memoryless tightening") {
  TabularPomdp m = smallRandomInstance(90, 3, 2, 2, 2, RandomRevealing::Multi);
  Policy piB = randomMemorylessPolicy(m, 91, 0.3);
  Policy piE = randomMemorylessPolicy(m, 92, 0.3);
  TabularPomdp mHat = smallRandomInstance(93, 3, 2, 2, 2, RandomRevealing::Multi);
  CHECK(cEffMulti(m, m, piE, piB).cEff == 1.0);
  CHECK(cEffMulti(m, mHat, piB, piB).cEff == doctest::Approx(1.0).epsilon(1e-9));
  CEffMultiResult r = cEffMulti(m, mHat, piE, piB, true);
  REQUIRE(r.cEffTilde.has_value());
  CHECK(*r.cEffTilde <= r.cEff + 1e-8);
  Policy history = Policy::historyTable(2, Vector::Constant(2, 0.5), {});
  CHECK_THROWS_AS(cEffMulti(m, mHat, piE, history), UnsupportedPolicyError);
}

TEST_CASE("approximation error against the true model") {
  TabularPomdp m = smallRandomInstance(94, 3, 2, 3, 2);
  Policy piB = randomMemorylessPolicy(m, 95, 0.3);
  Dataset data = sampleDataset(m, piB, 200, 96);
  ModelClass onlyTrue;
  onlyTrue.models = {m};
  CHECK(epsApprox(onlyTrue, m, piB, data) == 0.0);
  // Class members share the known reward function; only dynamics differ.
  TabularPomdp other = smallRandomInstance(97, 3, 2, 3, 2);
  other.rewards = m.rewards;
  ModelClass withOthers;
  withOthers.models = {other, m};
  CHECK(epsApprox(withOthers, m, piB, data) <= 1e-12);
  // Direct recomputation.
  double starLik = logLikelihood(m, piB, data);
  double otherLik = logLikelihood(withOthers.models[0], piB, data);
  double expected = std::min(0.0, (starLik - otherLik) / 200.0);
  CHECK(epsApprox(withOthers, m, piB, data) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("FDVF satisfies its defining identity") {
  TabularPomdp m = smallRandomInstance(98, 3, 2, 3, 2, RandomRevealing::Single);
  Policy piB = randomMemorylessPolicy(m, 99, 0.4);
  Policy piE = randomMemorylessPolicy(m, 100, 0.4);
  for (int h = 0; h + 1 < m.horizon; ++h) {
    Vector vF = fdvfConstruct(m, piB, piE, h);
    Matrix u = outcomeMatrix(m, piB, h);
    Vector vS = latentValue(m, piE, h);
    CHECK((u.transpose() * vF - vS).cwiseAbs().maxCoeff() < 1e-8);
  }
  // On-policy the construction recovers the raw future returns.
  Vector vF = fdvfConstruct(m, piB, piB, 1);
  for (Eigen::Index f = 0; f < vF.size(); ++f) {
    std::vector<OaPair> future = decodeFuture(m, 1, static_cast<std::uint64_t>(f));
    double rPlus = 0.0;
    for (std::size_t k = 0; k < future.size(); ++k)
      rPlus += m.reward(1 + static_cast<int>(k), future[k].obs);
    CHECK(vF[f] == doctest::Approx(rPlus).epsilon(1e-8));
  }
}

TEST_CASE("FDVF refuses zero-return futures and history-dependent policies") {
  TabularPomdp m = smallRandomInstance(101, 3, 2, 3, 2, RandomRevealing::Single);
  for (auto& r : m.rewards)
    for (double& v : r) v = 0.0;  // every future now returns zero
  m.validate();
  Policy piB = Policy::uniformMemoryless(m);
  CHECK_THROWS_AS(fdvfConstruct(m, piB, piB, 0), DegenerateWeightError);
  Policy history = Policy::historyTable(2, Vector::Constant(2, 0.5), {});
  CHECK_THROWS_AS(fdvfConstruct(m, history, piB, 0), UnsupportedPolicyError);
}

TEST_CASE("single-state FDVF matches scalar algebra") {
  TabularPomdp m = smallRandomInstance(102, 3, 1, 2, 2);
  Policy piB = randomMemorylessPolicy(m, 103, 0.3);
  Policy piE = randomMemorylessPolicy(m, 104, 0.3);
  const int h = 1;
  Vector vF = fdvfConstruct(m, piB, piE, h);
  Matrix u = outcomeMatrix(m, piB, h);
  double vS = latentValue(m, piE, h)[0];
  // With one state, Sigma^{R,p} is scalar and the closed form collapses.
  double sigma = 0.0;
  for (Eigen::Index f = 0; f < u.rows(); ++f) {
    std::vector<OaPair> future = decodeFuture(m, h, static_cast<std::uint64_t>(f));
    double rPlus = 0.0;
    for (std::size_t k = 0; k < future.size(); ++k)
      rPlus += m.reward(h + static_cast<int>(k), future[k].obs);
    if (u(f, 0) > 0.0) sigma += rPlus * u(f, 0);
  }
  for (Eigen::Index f = 0; f < u.rows(); ++f) {
    std::vector<OaPair> future = decodeFuture(m, h, static_cast<std::uint64_t>(f));
    double rPlus = 0.0;
    for (std::size_t k = 0; k < future.size(); ++k)
      rPlus += m.reward(h + static_cast<int>(k), future[k].obs);
    double expected = u(f, 0) > 0.0 ? rPlus / u(f, 0) * u(f, 0) / sigma * vS : 0.0;
    CHECK(vF[f] == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK((u.transpose() * vF)(0) == doctest::Approx(vS).epsilon(1e-9));
}

TEST_CASE("total variation distance properties") {
  TabularPomdp m = smallRandomInstance(105, 3, 2, 2, 2);
  Policy piB = randomMemorylessPolicy(m, 106, 0.3);
  CHECK(trajectoryTotalVariation(m, m, piB) == 0.0);
  TabularPomdp other = smallRandomInstance(107, 3, 2, 2, 2);
  double tv = trajectoryTotalVariation(m, other, piB);
  CHECK(tv >= 0.0);
  CHECK(tv <= 1.0 + 1e-12);
}
