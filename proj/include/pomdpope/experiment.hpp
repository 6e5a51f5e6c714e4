#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "pomdpope/estimators.hpp"

namespace pomdpope {

struct ExperimentConfig {
  std::string name;  // theorem3-separation | theorem6-knife-edge | mle-rate | is-contrast
  std::vector<int> horizonList;
  std::vector<std::uint64_t> sampleSizeList;
  std::vector<std::uint64_t> seedList;
  RevealingMode mode = RevealingMode::Single;
  double threshold = kInf;
  std::uint64_t cap = kDefaultEnumerationCap;
  std::string outputPath;  // CSV path; summary goes to <outputPath>.summary.json

  void validate() const;
  static ExperimentConfig fromJson(const nlohmann::json& j);
};

struct ExperimentRow {
  int horizon = 0;
  std::uint64_t sampleSize = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::string policyId;
  double estimate = 0.0;
  double trueValue = 0.0;
  double absError = 0.0;
  int selectedModel = -1;
  std::string coefficients;  // semicolon-separated name=value pairs
  std::string error;         // nonempty when the row failed
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  nlohmann::json summary;
};

/// Deterministic seeded sweep: one row per (H, n, seed, method[, policy]).
/// Module errors are recorded per-row and the sweep continues.
ExperimentResult runExperiment(const ExperimentConfig& config);

std::string rowsToCsv(const std::vector<ExperimentRow>& rows);

}  // namespace pomdpope
