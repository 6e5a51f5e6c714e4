#pragma once

#include <json.hpp>
#include <string>

#include "pomdpope/constructions.hpp"

namespace pomdpope {

nlohmann::json pomdpToJson(const TabularPomdp& model);
TabularPomdp pomdpFromJson(const nlohmann::json& j);

nlohmann::json policyToJson(const Policy& policy);
Policy policyFromJson(const nlohmann::json& j);

/// Dataset text format: header line `n=<int> seed=<int> policy=<id>`, then one
/// trajectory per line as whitespace-separated `o a r` triples.
std::string datasetToText(const Dataset& data);
Dataset datasetFromText(const std::string& text);

nlohmann::json coverageReportToJson(const CoverageReport& report);

TabularPomdp loadPomdp(const std::string& path);
Policy loadPolicy(const std::string& path);
Dataset loadDataset(const std::string& path);
void savePomdp(const TabularPomdp& model, const std::string& path);
void savePolicy(const Policy& policy, const std::string& path);
void saveDataset(const Dataset& data, const std::string& path);

/// Renders non-finite values as the strings "inf" / "-inf" / "nan".
nlohmann::json finiteOrString(double value);

}  // namespace pomdpope
