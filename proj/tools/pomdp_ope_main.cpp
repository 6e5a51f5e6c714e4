#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pomdpope/experiment.hpp"
#include "pomdpope/io.hpp"

namespace {

using namespace pomdpope;
using nlohmann::json;

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::uint64_t cap = kDefaultEnumerationCap;
  std::string out;
};

void emit(const GlobalFlags& flags, const std::string& content) {
  if (flags.out.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream file(flags.out);
  if (!file) throw Error("cannot write " + flags.out);
  file << content;
}

RevealingMode parseMode(const std::string& mode) {
  if (mode == "single") return RevealingMode::Single;
  if (mode == "multi") return RevealingMode::Multi;
  throw ParameterError("unknown mode '" + mode + "'");
}

json bundleExpectations(const HardnessBundle& bundle) {
  json expected;
  for (const auto& [name, value] : bundle.expectedValues)
    expected["values"][name] = finiteOrString(value);
  for (const auto& [name, value] : bundle.expectedCoefficients)
    expected["coefficients"][name] = finiteOrString(value);
  return expected;
}

void writeBundle(const HardnessBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  savePomdp(bundle.trueModel, dir + "/model.json");
  for (std::size_t m = 0; m < bundle.modelClass.models.size(); ++m)
    savePomdp(bundle.modelClass.models[m], dir + "/class-" + std::to_string(m) + ".json");
  savePolicy(bundle.behaviorPolicy, dir + "/behavior.json");
  for (const Policy& pi : bundle.targetPolicies)
    savePolicy(pi, dir + "/" + (pi.id.empty() ? "target" : pi.id) + ".json");
  std::ofstream sidecar(dir + "/expected.json");
  if (!sidecar) throw Error("cannot write " + dir + "/expected.json");
  sidecar << bundleExpectations(bundle).dump(2) << '\n';
}

int runGen(const GlobalFlags& flags, const std::string& kind, int horizon,
           const std::string& specPath) {
  std::string dir = flags.out.empty() ? "." : flags.out;
  if (kind == "theorem3") {
    writeBundle(theorem3Instance(horizon), dir);
  } else if (kind == "theorem6") {
    writeBundle(theorem6Instance(horizon, true, flags.cap), dir);
  } else if (kind == "random") {
    std::ifstream in(specPath);
    if (!in) throw Error("cannot open " + specPath);
    json j = json::parse(in);
    RandomPomdpSpec spec;
    spec.horizon = j.at("horizon").get<int>();
    spec.stateCounts = j.at("state_counts").get<std::vector<int>>();
    spec.actionCount = j.at("action_count").get<int>();
    spec.obsCounts = j.at("obs_counts").get<std::vector<int>>();
    if (j.contains("revealing")) {
      std::string r = j.at("revealing").get<std::string>();
      if (r == "single")
        spec.revealingMode = RandomRevealing::Single;
      else if (r == "multi")
        spec.revealingMode = RandomRevealing::Multi;
      else if (r != "none")
        throw ParameterError("unknown revealing mode '" + r + "'");
    }
    if (j.contains("min_singular")) spec.minSingular = j.at("min_singular").get<double>();
    std::filesystem::create_directories(dir);
    TabularPomdp model = randomPomdp(spec, flags.seed);
    savePomdp(model, dir + "/model.json");
    Policy piB = Policy::uniformMemoryless(model);
    piB.id = "uniform";
    savePolicy(piB, dir + "/behavior.json");
    // Sidecar: the instance's computed coverage coefficients.
    CoverageOptions options;
    options.cap = flags.cap;
    options.multi = spec.revealingMode == RandomRevealing::Multi;
    json sidecarJson;
    sidecarJson["coefficients"] = coverageReportToJson(coverageReport(model, piB, options));
    std::ofstream sidecar(dir + "/expected.json");
    if (!sidecar) throw Error("cannot write " + dir + "/expected.json");
    sidecar << sidecarJson.dump(2) << '\n';
  } else {
    throw ParameterError("unknown gen kind '" + kind + "'");
  }
  return 0;
}

int runCoverage(const GlobalFlags& flags, const std::string& modelPath,
                const std::string& policyPath, const std::string& mode,
                std::uint64_t mcSamples) {
  TabularPomdp model = loadPomdp(modelPath);
  Policy piB = loadPolicy(policyPath);
  CoverageOptions options;
  options.cap = flags.cap;
  options.mcSamples = mcSamples;
  options.seed = flags.seed;
  options.history = mode == "history" || mode == "all";
  options.single = mode == "single" || mode == "all";
  options.multi = mode == "multi" || mode == "all";
  options.weighted = mode == "weighted" || mode == "all";
  if (!options.history && !options.single && !options.multi && !options.weighted)
    throw ParameterError("unknown coverage mode '" + mode + "'");
  emit(flags, coverageReportToJson(coverageReport(model, piB, options)).dump(2));
  return 0;
}

int runOomCheck(const GlobalFlags& flags, const std::string& modelPath,
                const std::string& policyPath, const std::string& mode) {
  TabularPomdp model = loadPomdp(modelPath);
  RevealingMode revealing = parseMode(mode);
  Policy piB;
  bool havePolicy = !policyPath.empty();
  if (havePolicy)
    piB = loadPolicy(policyPath);
  else if (revealing == RevealingMode::Multi)
    throw ParameterError("multi mode needs --policy");
  OomBuildOptions buildOptions;
  buildOptions.cap = flags.cap;
  OomModel oom = buildOom(model, revealing, havePolicy ? &piB : nullptr, buildOptions);

  Policy probe = havePolicy && piB.memorylessFlag() ? piB : Policy::uniformMemoryless(model);
  double maxReconstruction = 0.0;
  for (int i = 0; i < 200; ++i) {
    Rng rng = Rng::substream(flags.seed, static_cast<std::uint64_t>(i));
    Trajectory tau = sampleTrajectory(model, probe, rng);
    double a = oomTrajectoryProb(oom, probe, tau).environment;
    double b = trajectoryProb(model, probe, tau, model.horizon).environment;
    maxReconstruction = std::max(maxReconstruction, std::abs(a - b));
  }
  double maxBelief = 0.0;
  for (int i = 0; i < 50; ++i) {
    Rng rng = Rng::substream(flags.seed + 1, static_cast<std::uint64_t>(i));
    Trajectory tau = sampleTrajectory(model, probe, rng);
    int len = static_cast<int>(rng.nextU64() % static_cast<std::uint64_t>(model.horizon));
    std::vector<OaPair> history;
    for (int t = 0; t < len; ++t) history.push_back({tau.steps[t].obs, tau.steps[t].action});
    maxBelief = std::max(maxBelief, beliefRelationResidual(model, oom, history,
                                                           havePolicy ? &piB : nullptr,
                                                           flags.cap));
  }
  // Contraction on each step-0 state indicator image, which must sum to 1.
  double maxContraction = 0.0;
  if (model.horizon >= 2) {
    Matrix base = revealing == RevealingMode::Single
                      ? model.emissions[0]
                      : outcomeMatrix(model, probe, 0, flags.cap);
    for (int s = 0; s < model.stateCounts[0]; ++s) {
      double sum = operatorContractionSum(oom, base.col(s), 0, model.horizon - 2, probe);
      maxContraction = std::max(maxContraction, std::abs(sum - 1.0));
    }
  }
  bool pass = maxReconstruction <= 1e-8 && maxBelief <= 1e-8 && maxContraction <= 1e-8;
  json report;
  report["pass"] = pass;
  report["max_reconstruction_residual"] = maxReconstruction;
  report["max_belief_relation_residual"] = maxBelief;
  report["max_contraction_deviation"] = maxContraction;
  emit(flags, report.dump(2));
  return pass ? 0 : 1;
}

int runSample(const GlobalFlags& flags, const std::string& modelPath,
              const std::string& policyPath, std::uint64_t n) {
  TabularPomdp model = loadPomdp(modelPath);
  Policy pi = loadPolicy(policyPath);
  Dataset data = sampleDataset(model, pi, n, flags.seed);
  data.validateAgainst(model);
  emit(flags, datasetToText(data));
  return 0;
}

json opeResultToJson(const OpeResult& result) {
  json j;
  j["estimate"] = result.estimate;
  j["method"] = result.method;
  if (result.selectedModelIndex) j["selected_model_index"] = *result.selectedModelIndex;
  for (const auto& [name, value] : result.diagnostics)
    j["diagnostics"][name] = finiteOrString(value);
  return j;
}

int runOpe(const GlobalFlags& flags, const std::vector<std::string>& modelPaths,
           const std::string& policyBPath, const std::string& policyEPath,
           const std::string& dataPath, const std::string& mode, double threshold,
           const std::string& method, const std::string& trueModelPath, bool diagnose) {
  Policy piB = loadPolicy(policyBPath);
  Policy piE = loadPolicy(policyEPath);
  Dataset data = loadDataset(dataPath);
  OpeResult result;
  if (method == "is") {
    result = importanceSamplingOpe(data, piE, piB);
  } else if (method == "mle") {
    ModelClass models;
    for (const std::string& path : modelPaths) models.models.push_back(loadPomdp(path));
    OpeOptions options;
    options.mode = parseMode(mode);
    options.threshold = threshold;
    options.cap = flags.cap;
    options.coefficientDiagnostics = diagnose;
    if (diagnose) {
      if (trueModelPath.empty()) throw ParameterError("diagnose needs --true-model");
      models.models.push_back(loadPomdp(trueModelPath));
      models.trueIndex = models.models.size() - 1;
    }
    result = modelBasedOpe(models, piB, piE, data, options);
  } else {
    throw ParameterError("unknown method '" + method + "'");
  }
  emit(flags, opeResultToJson(result).dump(2));
  return 0;
}

int runExperimentCmd(const GlobalFlags& flags, const std::string& configPath) {
  std::ifstream in(configPath);
  if (!in) throw Error("cannot open " + configPath);
  ExperimentConfig config = ExperimentConfig::fromJson(json::parse(in));
  if (!flags.out.empty()) config.outputPath = flags.out;
  ExperimentResult result = runExperiment(config);
  std::string csv = rowsToCsv(result.rows);
  if (config.outputPath.empty()) {
    std::cout << csv;
    std::cout << result.summary.dump(2) << '\n';
  } else {
    std::ofstream csvFile(config.outputPath);
    if (!csvFile) throw Error("cannot write " + config.outputPath);
    csvFile << csv;
    std::ofstream summaryFile(config.outputPath + ".summary.json");
    if (!summaryFile) throw Error("cannot write " + config.outputPath + ".summary.json");
    summaryFile << result.summary.dump(2) << '\n';
  }
  return 0;
}

int runValidate(const std::vector<std::string>& paths) {
  bool allValid = true;
  for (const std::string& path : paths) {
    try {
      std::ifstream in(path);
      if (!in) throw Error("cannot open file");
      std::string first;
      in >> first;
      in.close();
      if (first.rfind("n=", 0) == 0) {
        loadDataset(path);
      } else {
        json j = json::parse(std::ifstream(path));
        if (j.contains("kind"))
          policyFromJson(j);
        else
          pomdpFromJson(j);
      }
      std::cout << path << ": ok\n";
    } catch (const std::exception& e) {
      allValid = false;
      std::cout << path << ": INVALID: " << e.what() << '\n';
    }
  }
  return allValid ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular POMDP off-policy evaluation laboratory"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the global flags after the subcommand too

  GlobalFlags flags;
  if (const char* env = std::getenv("POMDP_OPE_CAP")) flags.cap = std::strtoull(env, nullptr, 10);
  app.add_option("--seed", flags.seed, "RNG seed");
  app.add_option("--cap", flags.cap, "Enumeration cap override");
  app.add_option("--out", flags.out, "Output file or directory");

  auto* gen = app.add_subcommand("gen", "Generate fixture instances");
  std::string genKind;
  int genHorizon = 5;
  std::string genSpec;
  gen->add_option("kind", genKind, "theorem3 | theorem6 | random")->required();
  gen->add_option("--horizon", genHorizon, "Horizon for the named constructions");
  gen->add_option("--spec", genSpec, "Random instance spec file");

  auto* coverage = app.add_subcommand("coverage", "Coverage / revealing coefficients");
  std::string covModel, covPolicy, covMode = "all";
  std::uint64_t covMcSamples = 0;
  coverage->add_option("--model", covModel)->required();
  coverage->add_option("--policy", covPolicy)->required();
  coverage->add_option("--mode", covMode, "single | multi | weighted | history | all");
  coverage->add_option("--mc-samples", covMcSamples, "Monte Carlo samples for Sigma_H");

  auto* oomCheck = app.add_subcommand("oom-check", "Observable-operator identity suites");
  std::string oomModel, oomPolicy, oomMode = "single";
  oomCheck->add_option("--model", oomModel)->required();
  oomCheck->add_option("--policy", oomPolicy, "Behavior policy (required for multi mode)");
  oomCheck->add_option("--mode", oomMode, "single | multi");

  auto* sample = app.add_subcommand("sample", "Sample a behavior dataset");
  std::string sampleModel, samplePolicy;
  std::uint64_t sampleN = 100;
  sample->add_option("--model", sampleModel)->required();
  sample->add_option("--policy", samplePolicy)->required();
  sample->add_option("--n", sampleN, "Number of trajectories");

  auto* ope = app.add_subcommand("ope", "Off-policy evaluation");
  std::vector<std::string> opeModels;
  std::string opePolicyB, opePolicyE, opeData, opeMode = "single", opeMethod = "mle";
  double opeThreshold = kInf;
  ope->add_option("--models", opeModels, "Candidate model files");
  ope->add_option("--policy-b", opePolicyB)->required();
  ope->add_option("--policy-e", opePolicyE)->required();
  ope->add_option("--data", opeData)->required();
  ope->add_option("--mode", opeMode, "single | multi");
  ope->add_option("--threshold", opeThreshold, "Pre-filtering threshold");
  ope->add_option("--method", opeMethod, "mle | is");

  auto* diagnose = app.add_subcommand("diagnose", "C_eff / eps_approx diagnostics");
  std::vector<std::string> diagModels;
  std::string diagTrueModel, diagPolicyB, diagPolicyE, diagData, diagMode = "single";
  double diagThreshold = kInf;
  diagnose->add_option("--models", diagModels, "Candidate model files");
  diagnose->add_option("--true-model", diagTrueModel)->required();
  diagnose->add_option("--policy-b", diagPolicyB)->required();
  diagnose->add_option("--policy-e", diagPolicyE)->required();
  diagnose->add_option("--data", diagData)->required();
  diagnose->add_option("--mode", diagMode, "single | multi");
  diagnose->add_option("--threshold", diagThreshold, "Pre-filtering threshold");

  auto* experiment = app.add_subcommand("experiment", "Run a named experiment sweep");
  std::string experimentConfig;
  experiment->add_option("--config", experimentConfig)->required();

  auto* validate = app.add_subcommand("validate", "Validate model/policy/dataset files");
  std::vector<std::string> validatePaths;
  validate->add_option("files", validatePaths, "Files to validate")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return runGen(flags, genKind, genHorizon, genSpec);
    if (coverage->parsed())
      return runCoverage(flags, covModel, covPolicy, covMode, covMcSamples);
    if (oomCheck->parsed()) return runOomCheck(flags, oomModel, oomPolicy, oomMode);
    if (sample->parsed()) return runSample(flags, sampleModel, samplePolicy, sampleN);
    if (ope->parsed())
      return runOpe(flags, opeModels, opePolicyB, opePolicyE, opeData, opeMode, opeThreshold,
                    opeMethod, "", false);
    if (diagnose->parsed())
      return runOpe(flags, diagModels, diagPolicyB, diagPolicyE, diagData, diagMode,
                    diagThreshold, "mle", diagTrueModel, true);
    if (experiment->parsed()) return runExperimentCmd(flags, experimentConfig);
    if (validate->parsed()) return runValidate(validatePaths);
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return 2;
  } catch (const EmptyClassError& e) {
    std::cerr << "empty model class: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
