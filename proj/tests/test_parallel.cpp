#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

using namespace pomdpope;
using pomdpope::testing::smallRandomInstance;

// The parallel kernels must be bitwise-identical to their serial references:
// substream-per-index RNG and index-ordered reductions make the schedule
// irrelevant.

TEST_CASE("dataset sampling matches the serial reference bitwise") {
  TabularPomdp m = smallRandomInstance(91, 4, 3, 3, 2);
  Policy pi = randomMemorylessPolicy(m, 92, 0.2);
  for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
    Dataset parallel = sampleDataset(m, pi, 2000, seed);
    Dataset serial = sampleDatasetSerial(m, pi, 2000, seed);
    REQUIRE(parallel.trajectories.size() == serial.trajectories.size());
    for (std::size_t i = 0; i < parallel.trajectories.size(); ++i)
      for (int h = 0; h < m.horizon; ++h) {
        const StepRecord& a = parallel.trajectories[i].steps[h];
        const StepRecord& b = serial.trajectories[i].steps[h];
        CHECK(a.obs == b.obs);
        CHECK(a.action == b.action);
        CHECK(a.reward == b.reward);
      }
  }
}

TEST_CASE("log-likelihood matches the serial reference bitwise") {
  TabularPomdp m = smallRandomInstance(93, 4, 3, 3, 2);
  Policy pi = randomMemorylessPolicy(m, 94, 0.2);
  Dataset data = sampleDataset(m, pi, 3000, 95);
  CHECK(logLikelihood(m, pi, data) == logLikelihoodSerial(m, pi, data));
  LikelihoodOptions floored;
  floored.floorMode = true;
  CHECK(logLikelihood(m, pi, data, floored) == logLikelihoodSerial(m, pi, data, floored));
}

TEST_CASE("Monte Carlo Sigma_H matches the serial reference bitwise") {
  TabularPomdp m = smallRandomInstance(96, 3, 2, 3, 2);
  Policy pi = randomMemorylessPolicy(m, 97, 0.3);
  SigmaResult parallel = sigmaHistoryMonteCarlo(m, pi, 2, 20000, 98);
  SigmaResult serial = sigmaHistoryMonteCarloSerial(m, pi, 2, 20000, 98);
  CHECK(parallel.sigma == serial.sigma);
  CHECK(parallel.coefficient == serial.coefficient);
}
