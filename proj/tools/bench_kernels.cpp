// Times the OpenMP kernels against their serial reference implementations and
// checks that both produce bitwise-identical results.
#include <chrono>
#include <cstdio>

#include "pomdpope/constructions.hpp"

using namespace pomdpope;

namespace {

double seconds(std::chrono::steady_clock::time_point a,
               std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

template <typename F>
double timeIt(F&& f) {
  auto start = std::chrono::steady_clock::now();
  f();
  return seconds(start, std::chrono::steady_clock::now());
}

bool identical(const Dataset& a, const Dataset& b) {
  if (a.trajectories.size() != b.trajectories.size()) return false;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i)
    for (int h = 0; h < a.trajectories[i].length(); ++h) {
      const StepRecord& x = a.trajectories[i].steps[h];
      const StepRecord& y = b.trajectories[i].steps[h];
      if (x.obs != y.obs || x.action != y.action || x.reward != y.reward) return false;
    }
  return true;
}

}  // namespace

int main() {
  RandomPomdpSpec spec;
  spec.horizon = 6;
  spec.stateCounts.assign(6, 3);
  spec.obsCounts.assign(6, 4);
  spec.actionCount = 2;
  TabularPomdp model = randomPomdp(spec, 11);
  Policy piB = randomMemorylessPolicy(model, 12, 0.2);

  const std::uint64_t n = 200000;
  Dataset parallel, serial;
  double tPar = timeIt([&] { parallel = sampleDataset(model, piB, n, 5); });
  double tSer = timeIt([&] { serial = sampleDatasetSerial(model, piB, n, 5); });
  std::printf("sample_dataset      n=%llu  omp %.3fs  serial %.3fs  bitwise_equal=%d\n",
              static_cast<unsigned long long>(n), tPar, tSer, identical(parallel, serial));

  double likPar = 0.0, likSer = 0.0;
  double tLikPar = timeIt([&] { likPar = logLikelihood(model, piB, parallel); });
  double tLikSer = timeIt([&] { likSer = logLikelihoodSerial(model, piB, parallel); });
  std::printf("log_likelihood      n=%llu  omp %.3fs  serial %.3fs  bitwise_equal=%d\n",
              static_cast<unsigned long long>(n), tLikPar, tLikSer, likPar == likSer);

  const std::uint64_t mc = 100000;
  SigmaResult sigPar, sigSer;
  double tSigPar =
      timeIt([&] { sigPar = sigmaHistoryMonteCarlo(model, piB, 3, mc, 21); });
  double tSigSer =
      timeIt([&] { sigSer = sigmaHistoryMonteCarloSerial(model, piB, 3, mc, 21); });
  std::printf("sigma_history_mc    n=%llu  omp %.3fs  serial %.3fs  bitwise_equal=%d\n",
              static_cast<unsigned long long>(mc), tSigPar, tSigSer,
              sigPar.sigma == sigSer.sigma);
  return 0;
}
