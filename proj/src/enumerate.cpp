#include "pomdpope/enumerate.hpp"

#include <limits>

namespace pomdpope {

namespace {

struct EnumState {
  std::span<const TabularPomdp* const> models;
  std::span<const Policy* const> policies;
  std::vector<OaPair> history;
  std::vector<std::vector<Vector>> alphaStack;  // [depth][model]
  std::vector<double> policyWeights;
};

// DFS over (o, a) branches; prunes branches where every model assigns zero
// environment probability or every policy assigns zero action weight.
void recurseHistories(EnumState& st, int t, int targetStep, const HistoryVisitor& visitor) {
  if (t == targetStep) {
    visitor({st.history, st.alphaStack[t], st.policyWeights});
    return;
  }
  const TabularPomdp& ref = *st.models[0];
  const std::size_t nm = st.models.size();
  const std::size_t np = st.policies.size();
  std::vector<Vector> beta(nm);
  for (int o = 0; o < ref.obsCounts[t]; ++o) {
    double envMass = 0.0;
    for (std::size_t m = 0; m < nm; ++m) {
      beta[m] = st.models[m]->emissions[t].row(o).transpose().cwiseProduct(st.alphaStack[t][m]);
      envMass += beta[m].sum();
    }
    if (envMass <= 0.0) continue;
    for (int a = 0; a < ref.actionCount; ++a) {
      std::vector<double> savedWeights = st.policyWeights;
      double polMass = np == 0 ? 1.0 : 0.0;
      for (std::size_t p = 0; p < np; ++p) {
        st.policyWeights[p] *= st.policies[p]->actionProb(t, st.history, o, a);
        polMass += st.policyWeights[p];
      }
      if (polMass > 0.0) {
        for (std::size_t m = 0; m < nm; ++m)
          st.alphaStack[t + 1][m].noalias() = st.models[m]->transitions[t][a] * beta[m];
        st.history.push_back({o, a});
        recurseHistories(st, t + 1, targetStep, visitor);
        st.history.pop_back();
      }
      st.policyWeights = std::move(savedWeights);
    }
  }
}

void recurseTrajectories(EnumState& st, int t, const TrajectoryVisitor& visitor) {
  const TabularPomdp& ref = *st.models[0];
  const int lastStep = ref.horizon - 1;
  const std::size_t nm = st.models.size();
  const std::size_t np = st.policies.size();
  std::vector<Vector> beta(nm);
  for (int o = 0; o < ref.obsCounts[t]; ++o) {
    double envMass = 0.0;
    for (std::size_t m = 0; m < nm; ++m) {
      beta[m] = st.models[m]->emissions[t].row(o).transpose().cwiseProduct(st.alphaStack[t][m]);
      envMass += beta[m].sum();
    }
    if (envMass <= 0.0) continue;
    for (int a = 0; a < ref.actionCount; ++a) {
      std::vector<double> savedWeights = st.policyWeights;
      double polMass = np == 0 ? 1.0 : 0.0;
      for (std::size_t p = 0; p < np; ++p) {
        st.policyWeights[p] *= st.policies[p]->actionProb(t, st.history, o, a);
        polMass += st.policyWeights[p];
      }
      if (polMass > 0.0) {
        st.history.push_back({o, a});
        if (t == lastStep) {
          std::vector<double> envProbs(nm);
          for (std::size_t m = 0; m < nm; ++m) envProbs[m] = beta[m].sum();
          visitor({st.history, envProbs, st.policyWeights});
        } else {
          for (std::size_t m = 0; m < nm; ++m)
            st.alphaStack[t + 1][m].noalias() = st.models[m]->transitions[t][a] * beta[m];
          recurseTrajectories(st, t + 1, visitor);
        }
        st.history.pop_back();
      }
      st.policyWeights = std::move(savedWeights);
    }
  }
}

EnumState makeState(std::span<const TabularPomdp* const> models,
                    std::span<const Policy* const> policies, int depth) {
  EnumState st;
  st.models = models;
  st.policies = policies;
  st.history.reserve(depth);
  st.alphaStack.resize(depth + 1);
  for (int t = 0; t <= depth; ++t) st.alphaStack[t].resize(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) st.alphaStack[0][m] = models[m]->initialDist;
  st.policyWeights.assign(policies.size(), 1.0);
  return st;
}

}  // namespace

void forEachHistory(std::span<const TabularPomdp* const> models,
                    std::span<const Policy* const> policies, int step, std::uint64_t cap,
                    const HistoryVisitor& visitor) {
  if (models.empty()) throw StructuralError("history enumeration needs at least one model");
  const TabularPomdp& ref = *models[0];
  if (step < 0 || step > ref.horizon - 1)
    throw StructuralError("history enumeration step out of range");
  std::uint64_t required = ref.enumerationSize(step);
  if (required > cap) throw CapacityError("history enumeration", required, cap);
  EnumState st = makeState(models, policies, step);
  recurseHistories(st, 0, step, visitor);
}

void forEachTrajectory(std::span<const TabularPomdp* const> models,
                       std::span<const Policy* const> policies, std::uint64_t cap,
                       const TrajectoryVisitor& visitor) {
  if (models.empty()) throw StructuralError("trajectory enumeration needs at least one model");
  const TabularPomdp& ref = *models[0];
  std::uint64_t required = ref.enumerationSize(ref.horizon);
  if (required > cap) throw CapacityError("trajectory enumeration", required, cap);
  EnumState st = makeState(models, policies, ref.horizon - 1);
  recurseTrajectories(st, 0, visitor);
}

std::uint64_t futureCount(const TabularPomdp& model, int step) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = static_cast<std::uint64_t>(model.obsCounts[model.horizon - 1]);
  for (int t = step; t < model.horizon - 1; ++t) {
    std::uint64_t branch =
        static_cast<std::uint64_t>(model.obsCounts[t]) * static_cast<std::uint64_t>(model.actionCount);
    if (total > kMax / branch) return kMax;
    total *= branch;
  }
  return total;
}

std::vector<OaPair> decodeFuture(const TabularPomdp& model, int step, std::uint64_t index) {
  std::vector<OaPair> future;
  std::uint64_t remaining = futureCount(model, step);
  for (int t = step; t < model.horizon - 1; ++t) {
    remaining /= static_cast<std::uint64_t>(model.obsCounts[t]) *
                 static_cast<std::uint64_t>(model.actionCount);
    std::uint64_t block = index / remaining;
    index %= remaining;
    future.push_back({static_cast<int>(block / model.actionCount),
                      static_cast<int>(block % model.actionCount)});
  }
  future.push_back({static_cast<int>(index), -1});
  return future;
}

}  // namespace pomdpope
