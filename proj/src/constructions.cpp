#include "pomdpope/constructions.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace pomdpope {

namespace {

void expectClose(double actual, double expected, double tol, const std::string& what) {
  if (std::isinf(expected)) {
    if (!std::isinf(actual))
      throw Error("construction check failed: " + what + " is finite, expected infinite");
    return;
  }
  if (std::abs(actual - expected) > tol)
    throw Error("construction check failed: " + what + " = " + std::to_string(actual) +
                ", expected " + std::to_string(expected));
}

Vector unitVector(int dim, int index) {
  Vector v = Vector::Zero(dim);
  v[index] = 1.0;
  return v;
}

Vector dirichlet(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.nextExponential();
  return v / v.sum();
}

double sigmaMinEigen(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().minCoeff();
}

}  // namespace

HardnessBundle theorem3Instance(int horizon, bool verify) {
  if (horizon < 3) throw ParameterError("theorem3 instance needs horizon >= 3");
  const int last = horizon - 1;
  TabularPomdp m;
  m.horizon = horizon;
  m.actionCount = 2;  // 0 = L, 1 = R
  m.stateCounts.assign(horizon, 1);
  m.stateCounts[last] = 2;  // 0 = terminal L, 1 = terminal R
  m.obsCounts = m.stateCounts;
  m.initialDist = Vector::Ones(1);
  m.transitions.resize(horizon - 1);
  for (int h = 0; h + 1 < horizon; ++h) {
    int next = m.stateCounts[h + 1];
    m.transitions[h].resize(2);
    if (h + 1 < last) {
      m.transitions[h][0] = Matrix::Ones(1, 1);
      m.transitions[h][1] = Matrix::Ones(1, 1);
    } else {
      m.transitions[h][0] = unitVector(next, 0);
      m.transitions[h][1] = unitVector(next, 1);
    }
  }
  m.emissions.resize(horizon);
  m.rewards.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    m.emissions[h] = Matrix::Identity(m.obsCounts[h], m.stateCounts[h]);
    m.rewards[h].assign(m.obsCounts[h], 0.0);
  }
  m.rewards[last][0] = 1.0;
  m.validate();

  // pi_1 is always-L; pi_2 deviates to R only on the all-L history at the
  // branch step. Both pick the common fixed action L once an R has appeared.
  Vector takeL = unitVector(2, 0);
  Vector takeR = unitVector(2, 1);
  std::vector<OaPair> allL(last - 1, OaPair{0, 0});
  Policy pi1 = Policy::historyTable(2, takeL, {});
  pi1.id = "pi1";
  std::map<std::tuple<int, std::string, int>, Vector> deviation;
  deviation[{last - 1, encodeHistory(allL), 0}] = takeR;
  Policy pi2 = Policy::historyTable(2, takeL, std::move(deviation));
  pi2.id = "pi2";

  HardnessBundle bundle;
  bundle.trueModel = m;
  bundle.modelClass.models = {m};
  bundle.modelClass.trueIndex = 0;
  bundle.behaviorPolicy = Policy::uniformMemoryless(m);
  bundle.targetPolicies = {pi1, pi2};
  bundle.expectedValues = {{"pi1", 1.0}, {"pi2", 0.0}};
  bundle.expectedCoefficients = {{"c_a", 2.0}, {"c_h", 1.0}, {"c_o", 1.0}, {"c_f", 1.0}};

  if (verify) {
    expectClose(policyValueExact(m, pi1), 1.0, 1e-12, "J(pi1)");
    expectClose(policyValueExact(m, pi2), 0.0, 1e-12, "J(pi2)");
    expectClose(computeCA(m, bundle.behaviorPolicy), 2.0, 1e-9, "C_A");
    for (int h = 0; h + 1 < horizon; ++h) {
      expectClose(sigmaHistory(m, bundle.behaviorPolicy, h).coefficient, 1.0, 1e-9, "c_h");
      expectClose(sigmaObs(m, h).coefficient, 1.0, 1e-9, "c_o");
      expectClose(sigmaFuture(m, bundle.behaviorPolicy, h).coefficient, 1.0, 1e-9, "c_f");
    }
  }
  return bundle;
}

namespace {

// M_1 / M_2 of the knife-edge pair: the latent state at step h records the
// full action history as a bit string (0 = L, most significant first).
TabularPomdp theorem6Recorder(int horizon, bool allRBranchToGood) {
  const int last = horizon - 1;
  TabularPomdp m;
  m.horizon = horizon;
  m.actionCount = 2;  // 0 = L, 1 = R
  m.stateCounts.resize(horizon);
  for (int h = 0; h < last; ++h) m.stateCounts[h] = 1 << h;
  m.stateCounts[last] = 2;  // 0 = s_good, 1 = s_bad
  m.obsCounts.assign(horizon, 1);
  m.obsCounts[last] = 2;  // 0 = o_good, 1 = o_bad
  m.initialDist = Vector::Ones(1);
  m.transitions.resize(horizon - 1);
  for (int h = 0; h + 1 < last; ++h) {
    m.transitions[h].resize(2);
    for (int a = 0; a < 2; ++a) {
      Matrix t = Matrix::Zero(m.stateCounts[h + 1], m.stateCounts[h]);
      for (int s = 0; s < m.stateCounts[h]; ++s) t(2 * s + a, s) = 1.0;
      m.transitions[h][a] = t;
    }
  }
  // Branch step: L always reaches s_good; R reaches s_bad, except that the
  // all-R state maps R to s_good in the M_2 variant.
  m.transitions[last - 1].resize(2);
  m.transitions[last - 1][0] = Matrix::Zero(2, m.stateCounts[last - 1]);
  m.transitions[last - 1][0].row(0).setOnes();
  Matrix tR = Matrix::Zero(2, m.stateCounts[last - 1]);
  tR.row(1).setOnes();
  if (allRBranchToGood) {
    int allR = m.stateCounts[last - 1] - 1;
    tR(1, allR) = 0.0;
    tR(0, allR) = 1.0;
  }
  m.transitions[last - 1][1] = tR;
  m.emissions.resize(horizon);
  m.rewards.resize(horizon);
  for (int h = 0; h < last; ++h) {
    m.emissions[h] = Matrix::Ones(1, m.stateCounts[h]);
    m.rewards[h].assign(1, 0.0);
  }
  m.emissions[last] = Matrix::Identity(2, 2);
  m.rewards[last] = {1.0, 0.0};
  m.validate();
  return m;
}

}  // namespace

HardnessBundle theorem6Instance(int horizon, bool verify, std::uint64_t cap) {
  if (horizon < 3) throw ParameterError("theorem6 instance needs horizon >= 3");
  const int last = horizon - 1;
  std::uint64_t states = std::uint64_t{1} << (last - 1);
  if (states > cap) throw CapacityError("theorem6 state space", states, cap);

  // M*: a single latent state per step; only the last action matters.
  TabularPomdp mStar;
  mStar.horizon = horizon;
  mStar.actionCount = 2;
  mStar.stateCounts.assign(horizon, 1);
  mStar.stateCounts[last] = 2;
  mStar.obsCounts.assign(horizon, 1);
  mStar.obsCounts[last] = 2;
  mStar.initialDist = Vector::Ones(1);
  mStar.transitions.resize(horizon - 1);
  for (int h = 0; h + 1 < last; ++h)
    mStar.transitions[h] = {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  mStar.transitions[last - 1] = {unitVector(2, 0), unitVector(2, 1)};
  mStar.emissions.resize(horizon);
  mStar.rewards.resize(horizon);
  for (int h = 0; h < last; ++h) {
    mStar.emissions[h] = Matrix::Ones(1, 1);
    mStar.rewards[h].assign(1, 0.0);
  }
  mStar.emissions[last] = Matrix::Identity(2, 2);
  mStar.rewards[last] = {1.0, 0.0};
  mStar.validate();

  HardnessBundle bundle;
  bundle.trueModel = mStar;
  bundle.modelClass.models = {theorem6Recorder(horizon, false),
                              theorem6Recorder(horizon, true)};
  bundle.behaviorPolicy = Policy::uniformMemoryless(mStar);
  Policy alwaysR = Policy::openLoop(std::vector<int>(horizon, 1));
  alwaysR.id = "always-R";
  bundle.targetPolicies = {alwaysR};
  bundle.expectedValues = {{"always-R", 0.0}, {"always-R@M2", 1.0}};
  bundle.expectedCoefficients = {{"c_a", 2.0},
                                 {"c_o_true", 1.0},
                                 {"c_h_true", 1.0},
                                 {"c_o_m1", kInf},
                                 {"c_o_m2", kInf}};

  if (verify) {
    expectClose(policyValueExact(mStar, alwaysR, cap), 0.0, 1e-12, "J_{M*}(always-R)");
    expectClose(policyValueExact(bundle.modelClass.models[1], alwaysR, cap), 1.0, 1e-12,
                "J_{M_2}(always-R)");
    expectClose(computeCA(mStar, bundle.behaviorPolicy, cap), 2.0, 1e-9, "C_A");
    for (int h = 0; h + 1 < horizon; ++h) {
      expectClose(sigmaObs(mStar, h).coefficient, 1.0, 1e-9, "c_o(M*)");
      expectClose(sigmaHistory(mStar, bundle.behaviorPolicy, h, cap).coefficient, 1.0, 1e-9,
                  "c_h(M*)");
    }
    // The recorders hide their state behind one observation, so Sigma_O is
    // rank one as soon as the state space splits.
    int probe = std::min(3, last - 1);
    if (probe >= 1) {
      expectClose(sigmaObs(bundle.modelClass.models[0], probe).coefficient, kInf, 0.0,
                  "c_o(M_1)");
      expectClose(sigmaObs(bundle.modelClass.models[1], probe).coefficient, kInf, 0.0,
                  "c_o(M_2)");
    }
    // Observable equivalence of M_1 and M* on sampled behavior trajectories.
    for (int i = 0; i < 200; ++i) {
      Rng rng = Rng::substream(61, static_cast<std::uint64_t>(i));
      Trajectory tau = sampleTrajectory(mStar, bundle.behaviorPolicy, rng);
      double pStar = trajectoryProb(mStar, bundle.behaviorPolicy, tau, horizon).environment;
      Trajectory tauCopy = tau;
      double pM1 = trajectoryProb(bundle.modelClass.models[0], bundle.behaviorPolicy, tauCopy,
                                  horizon)
                       .environment;
      expectClose(pM1, pStar, 1e-12, "P_{M_1}(tau)");
    }
    if (horizon <= 6)
      expectClose(trajectoryTotalVariation(bundle.modelClass.models[0], mStar,
                                           bundle.behaviorPolicy, cap),
                  0.0, 1e-12, "TV(M_1, M*)");
  }
  return bundle;
}

TabularPomdp randomPomdp(const RandomPomdpSpec& spec, std::uint64_t seed) {
  if (spec.horizon < 1) throw ParameterError("random POMDP needs horizon >= 1");
  if (static_cast<int>(spec.stateCounts.size()) != spec.horizon ||
      static_cast<int>(spec.obsCounts.size()) != spec.horizon)
    throw ParameterError("random POMDP spec needs per-step state and observation counts");
  if (spec.actionCount < 1) throw ParameterError("random POMDP needs at least one action");
  if (spec.revealingMode == RandomRevealing::Single)
    for (int h = 0; h < spec.horizon; ++h)
      if (spec.obsCounts[h] < spec.stateCounts[h])
        throw ParameterError("single-step revealing needs obsCounts[h] >= stateCounts[h]");

  for (int attempt = 0; attempt < spec.maxAttempts; ++attempt) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(attempt));
    TabularPomdp m;
    m.horizon = spec.horizon;
    m.stateCounts = spec.stateCounts;
    m.actionCount = spec.actionCount;
    m.obsCounts = spec.obsCounts;
    m.initialDist = dirichlet(rng, spec.stateCounts[0]);
    m.transitions.resize(spec.horizon - 1);
    for (int h = 0; h + 1 < spec.horizon; ++h) {
      m.transitions[h].resize(spec.actionCount);
      for (int a = 0; a < spec.actionCount; ++a) {
        Matrix t(spec.stateCounts[h + 1], spec.stateCounts[h]);
        for (int s = 0; s < spec.stateCounts[h]; ++s)
          t.col(s) = dirichlet(rng, spec.stateCounts[h + 1]);
        m.transitions[h][a] = t;
      }
    }
    m.emissions.resize(spec.horizon);
    m.rewards.resize(spec.horizon);
    for (int h = 0; h < spec.horizon; ++h) {
      Matrix e(spec.obsCounts[h], spec.stateCounts[h]);
      for (int s = 0; s < spec.stateCounts[h]; ++s) e.col(s) = dirichlet(rng, spec.obsCounts[h]);
      m.emissions[h] = e;
      m.rewards[h].resize(spec.obsCounts[h]);
      for (int o = 0; o < spec.obsCounts[h]; ++o) m.rewards[h][o] = rng.nextDouble();
    }
    m.validate();

    bool ok = true;
    if (spec.revealingMode == RandomRevealing::Single) {
      for (int h = 0; h + 1 < spec.horizon && ok; ++h)
        ok = sigmaMinEigen(sigmaObs(m, h).sigma) >= spec.minSingular;
    } else if (spec.revealingMode == RandomRevealing::Multi) {
      Policy uniform = Policy::uniformMemoryless(m);
      for (int h = 0; h + 1 < spec.horizon && ok; ++h)
        ok = sigmaMinEigen(sigmaFuture(m, uniform, h).sigma) >= spec.minSingular;
    }
    if (ok) return m;
  }
  throw GenerationFailureError("random POMDP rejection sampling exhausted " +
                               std::to_string(spec.maxAttempts) + " attempts");
}

TabularPomdp mdpEmbed(const std::vector<std::vector<Matrix>>& transitions,
                      const std::vector<std::vector<double>>& stateRewards,
                      const Vector& initialDist) {
  if (stateRewards.empty()) throw StructuralError("MDP embedding needs at least one step");
  TabularPomdp m;
  m.horizon = static_cast<int>(stateRewards.size());
  if (static_cast<int>(transitions.size()) != m.horizon - 1)
    throw StructuralError("MDP embedding: transitions must cover H-1 steps");
  m.actionCount = transitions.empty() ? 1 : static_cast<int>(transitions[0].size());
  m.stateCounts.resize(m.horizon);
  for (int h = 0; h < m.horizon; ++h) m.stateCounts[h] = static_cast<int>(stateRewards[h].size());
  m.obsCounts = m.stateCounts;
  m.initialDist = initialDist;
  m.transitions = transitions;
  m.emissions.resize(m.horizon);
  m.rewards = stateRewards;
  for (int h = 0; h < m.horizon; ++h)
    m.emissions[h] = Matrix::Identity(m.stateCounts[h], m.stateCounts[h]);
  m.validate();
  return m;
}

Policy randomMemorylessPolicy(const TabularPomdp& model, std::uint64_t seed, double uniformMix) {
  if (uniformMix < 0.0 || uniformMix > 1.0)
    throw ParameterError("uniform mix must lie in [0, 1]");
  Rng rng = Rng::substream(seed, 0);
  std::vector<Matrix> tables(model.horizon);
  Vector uniform = Vector::Constant(model.actionCount, 1.0 / model.actionCount);
  for (int h = 0; h < model.horizon; ++h) {
    Matrix t(model.actionCount, model.obsCounts[h]);
    for (int o = 0; o < model.obsCounts[h]; ++o)
      t.col(o) = (1.0 - uniformMix) * dirichlet(rng, model.actionCount) + uniformMix * uniform;
    tables[h] = t;
  }
  Policy p = Policy::memoryless(std::move(tables));
  p.id = "random-" + std::to_string(seed);
  return p;
}

}  // namespace pomdpope
