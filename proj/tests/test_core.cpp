#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace pomdpope;
using pomdpope::testing::bruteForceJoint;
using pomdpope::testing::bruteForceProb;
using pomdpope::testing::smallRandomInstance;

TEST_CASE("model validation names the offending coordinates") {
  TabularPomdp m = smallRandomInstance(3);
  TabularPomdp broken = m;
  broken.transitions[0][1](0, 1) += 0.1;
  try {
    broken.validate();
    FAIL("expected a structural error");
  } catch (const StructuralError& e) {
    std::string what = e.what();
    CHECK(what.find("column") != std::string::npos);
  }
  broken = m;
  broken.rewards[1][2] = 1.5;
  try {
    broken.validate();
    FAIL("expected a structural error");
  } catch (const StructuralError& e) {
    std::string what = e.what();
    CHECK(what.find("reward") != std::string::npos);
  }
}

TEST_CASE("trajectory probability matches the state-sequence oracle") {
  TabularPomdp m = smallRandomInstance(7, 4, 3, 2, 2);
  Policy pi = randomMemorylessPolicy(m, 8, 0.1);
  for (int i = 0; i < 30; ++i) {
    Rng rng = Rng::substream(100, static_cast<std::uint64_t>(i));
    Trajectory tau = sampleTrajectory(m, pi, rng);
    double expected = bruteForceProb(m, pi, tau);
    CHECK(trajectoryProb(m, pi, tau, m.horizon).total() == doctest::Approx(expected).epsilon(1e-11));
  }
}

TEST_CASE("trajectory probability splits environment and policy factors") {
  TabularPomdp m = smallRandomInstance(9);
  Policy pi = randomMemorylessPolicy(m, 10, 0.2);
  Policy uniform = Policy::uniformMemoryless(m);
  Rng rng = Rng::substream(11, 0);
  Trajectory tau = sampleTrajectory(m, pi, rng);
  TrajectoryProb a = trajectoryProb(m, pi, tau, m.horizon);
  TrajectoryProb b = trajectoryProb(m, uniform, tau, m.horizon);
  CHECK(a.environment == doctest::Approx(b.environment).epsilon(1e-14));
  CHECK(b.policy == doctest::Approx(std::pow(0.5, m.horizon)).epsilon(1e-14));
}

TEST_CASE("belief state is the normalized posterior") {
  TabularPomdp m = smallRandomInstance(12, 4, 3, 2, 2);
  Policy pi = randomMemorylessPolicy(m, 13, 0.1);
  Rng rng = Rng::substream(14, 0);
  Trajectory tau = sampleTrajectory(m, pi, rng);
  for (int len = 0; len < m.horizon; ++len) {
    std::vector<OaPair> history;
    for (int t = 0; t < len; ++t) history.push_back({tau.steps[t].obs, tau.steps[t].action});
    BeliefVector belief = beliefState(m, history);
    double mass = 0.0;
    for (int s = 0; s < m.stateCounts[len]; ++s) mass += bruteForceJoint(m, history, s);
    REQUIRE(mass > 0.0);
    for (int s = 0; s < m.stateCounts[len]; ++s)
      CHECK(belief.values[s] ==
            doctest::Approx(bruteForceJoint(m, history, s) / mass).epsilon(1e-10));
    CHECK(belief.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("belief state rejects zero-probability histories") {
  // Deterministic start in state 0 with identity emissions: observing 1 at the
  // first step is impossible.
  TabularPomdp m;
  m.horizon = 2;
  m.stateCounts = {2, 2};
  m.actionCount = 1;
  m.obsCounts = {2, 2};
  m.initialDist = Vector::Zero(2);
  m.initialDist[0] = 1.0;
  m.transitions = {{Matrix::Identity(2, 2)}};
  m.emissions = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  m.rewards = {{0.0, 0.0}, {0.0, 1.0}};
  m.validate();
  std::vector<OaPair> impossible = {{1, 0}};
  CHECK_THROWS_AS(beliefState(m, impossible), ZeroProbabilityHistoryError);
  std::vector<OaPair> possible = {{0, 0}};
  CHECK_NOTHROW(beliefState(m, possible));
  std::vector<OaPair> outOfRange = {{3, 0}};
  CHECK_THROWS_AS(beliefState(m, outOfRange), StructuralError);
}

TEST_CASE("exact policy value agrees with Monte Carlo") {
  TabularPomdp m = smallRandomInstance(15, 4, 3, 3, 2);
  Policy pi = randomMemorylessPolicy(m, 16, 0.2);
  double exact = policyValueExact(m, pi);
  MonteCarloEstimate mc = policyValueMonteCarlo(m, pi, 40000, 17);
  CHECK(std::abs(mc.mean - exact) < 4.0 * mc.standardError + 1e-9);
}

TEST_CASE("latent value function reproduces the policy value") {
  TabularPomdp m = smallRandomInstance(18, 4, 3, 2, 2);
  Policy pi = randomMemorylessPolicy(m, 19, 0.1);
  Vector v0 = latentValue(m, pi, 0);
  CHECK(m.initialDist.dot(v0) == doctest::Approx(policyValueExact(m, pi)).epsilon(1e-10));
  Policy history = Policy::historyTable(2, Vector::Constant(2, 0.5), {});
  CHECK_THROWS_AS(latentValue(m, history, 0), UnsupportedPolicyError);
}

TEST_CASE("occupancy measures are distributions and match the enumeration path") {
  TabularPomdp m = smallRandomInstance(20, 4, 3, 2, 2);
  // An observation-independent memoryless policy has an exact HistoryTable
  // twin, exercising both computation paths on the same distribution.
  Vector dist(2);
  dist << 0.3, 0.7;
  std::vector<Matrix> tables;
  for (int h = 0; h < m.horizon; ++h) {
    Matrix t(2, m.obsCounts[h]);
    for (int o = 0; o < m.obsCounts[h]; ++o) t.col(o) = dist;
    tables.push_back(t);
  }
  Policy memoryless = Policy::memoryless(tables);
  Policy twin = Policy::historyTable(2, dist, {});
  for (int h = 0; h < m.horizon; ++h) {
    Matrix occA = latentOccupancy(m, memoryless, h);
    Matrix occB = latentOccupancy(m, twin, h);
    CHECK(occA.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((occA - occB).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sampling is deterministic and order-independent") {
  TabularPomdp m = smallRandomInstance(21);
  Policy pi = randomMemorylessPolicy(m, 22, 0.1);
  Dataset a = sampleDataset(m, pi, 500, 23);
  Dataset b = sampleDatasetSerial(m, pi, 500, 23);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i)
    for (int h = 0; h < m.horizon; ++h) {
      CHECK(a.trajectories[i].steps[h].obs == b.trajectories[i].steps[h].obs);
      CHECK(a.trajectories[i].steps[h].action == b.trajectories[i].steps[h].action);
    }
  a.validateAgainst(m);
}

TEST_CASE("enumeration respects the capacity cap") {
  TabularPomdp m = smallRandomInstance(24, 4, 2, 3, 2);
  CHECK_THROWS_AS(policyValueExact(m, Policy::uniformMemoryless(m), 10), CapacityError);
}

TEST_CASE("future indexing round-trips") {
  TabularPomdp m = smallRandomInstance(25, 3, 2, 3, 2);
  const int step = 1;
  std::uint64_t count = futureCount(m, step);
  CHECK(count == 3ULL * 2ULL * 3ULL);
  std::vector<OaPair> first = decodeFuture(m, step, 0);
  CHECK(first.size() == 2);
  CHECK(first[0].obs == 0);
  CHECK(first[0].action == 0);
  CHECK(first[1].obs == 0);
  CHECK(first[1].action == -1);
  std::vector<OaPair> last = decodeFuture(m, step, count - 1);
  CHECK(last[0].obs == 2);
  CHECK(last[0].action == 1);
  CHECK(last[1].obs == 2);
}

TEST_CASE("trajectory validation catches shape and reward mismatches") {
  TabularPomdp m = smallRandomInstance(26);
  Policy pi = Policy::uniformMemoryless(m);
  Rng rng = Rng::substream(27, 0);
  Trajectory tau = sampleTrajectory(m, pi, rng);
  Trajectory bad = tau;
  bad.steps.pop_back();
  CHECK_THROWS_AS(bad.validateAgainst(m), StructuralError);
  bad = tau;
  bad.steps[1].reward += 0.5;
  CHECK_THROWS_AS(bad.validateAgainst(m), StructuralError);
  CHECK_NOTHROW(tau.validateAgainst(m));
}
