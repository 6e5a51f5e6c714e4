#include "pomdpope/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace pomdpope {

using nlohmann::json;

namespace {

json vectorToJson(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vectorFromJson(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json matrixToJson(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Matrix matrixFromJson(const json& j) {
  if (j.empty()) return Matrix(0, 0);
  Matrix m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw StructuralError("ragged matrix in file");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

json stepCoefficients(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(finiteOrString(v));
  return out;
}

std::string readFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void writeFile(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

}  // namespace

json finiteOrString(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

json pomdpToJson(const TabularPomdp& model) {
  json j;
  j["horizon"] = model.horizon;
  j["state_counts"] = model.stateCounts;
  j["action_count"] = model.actionCount;
  j["obs_counts"] = model.obsCounts;
  j["initial_dist"] = vectorToJson(model.initialDist);
  json transitions = json::array();
  for (const auto& perStep : model.transitions) {
    json perAction = json::array();
    for (const Matrix& t : perStep) perAction.push_back(matrixToJson(t));
    transitions.push_back(perAction);
  }
  j["transitions"] = transitions;
  json emissions = json::array();
  for (const Matrix& e : model.emissions) emissions.push_back(matrixToJson(e));
  j["emissions"] = emissions;
  j["rewards"] = model.rewards;
  return j;
}

TabularPomdp pomdpFromJson(const json& j) {
  TabularPomdp m;
  m.horizon = j.at("horizon").get<int>();
  m.stateCounts = j.at("state_counts").get<std::vector<int>>();
  m.actionCount = j.at("action_count").get<int>();
  m.obsCounts = j.at("obs_counts").get<std::vector<int>>();
  m.initialDist = vectorFromJson(j.at("initial_dist"));
  for (const json& perStep : j.at("transitions")) {
    std::vector<Matrix> perAction;
    for (const json& t : perStep) perAction.push_back(matrixFromJson(t));
    m.transitions.push_back(std::move(perAction));
  }
  for (const json& e : j.at("emissions")) m.emissions.push_back(matrixFromJson(e));
  m.rewards = j.at("rewards").get<std::vector<std::vector<double>>>();
  m.validate();
  return m;
}

json policyToJson(const Policy& policy) {
  json j;
  j["id"] = policy.id;
  j["action_count"] = policy.actionCount();
  switch (policy.kind()) {
    case Policy::Kind::Memoryless: {
      j["kind"] = "memoryless";
      json tables = json::array();
      for (const Matrix& t : policy.memorylessTables()) tables.push_back(matrixToJson(t));
      j["tables"] = tables;
      break;
    }
    case Policy::Kind::OpenLoop:
      j["kind"] = "open-loop";
      j["actions"] = policy.openLoopActions();
      break;
    case Policy::Kind::HistoryTable: {
      j["kind"] = "history-table";
      j["default_dist"] = vectorToJson(policy.defaultDist());
      json entries = json::array();
      for (const auto& [key, dist] : policy.historyEntries()) {
        json e;
        e["step"] = std::get<0>(key);
        e["history"] = std::get<1>(key);
        e["obs"] = std::get<2>(key);
        e["dist"] = vectorToJson(dist);
        entries.push_back(e);
      }
      j["entries"] = entries;
      break;
    }
  }
  return j;
}

Policy policyFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  Policy p;
  if (kind == "memoryless") {
    std::vector<Matrix> tables;
    for (const json& t : j.at("tables")) tables.push_back(matrixFromJson(t));
    p = Policy::memoryless(std::move(tables));
  } else if (kind == "open-loop") {
    p = Policy::openLoop(j.at("actions").get<std::vector<int>>());
  } else if (kind == "history-table") {
    std::map<std::tuple<int, std::string, int>, Vector> entries;
    for (const json& e : j.at("entries"))
      entries[{e.at("step").get<int>(), e.at("history").get<std::string>(),
               e.at("obs").get<int>()}] = vectorFromJson(e.at("dist"));
    p = Policy::historyTable(j.at("action_count").get<int>(),
                             vectorFromJson(j.at("default_dist")), std::move(entries));
  } else {
    throw StructuralError("unknown policy kind '" + kind + "'");
  }
  if (j.contains("id")) p.id = j.at("id").get<std::string>();
  return p;
}

std::string datasetToText(const Dataset& data) {
  std::ostringstream out;
  out.precision(17);
  out << "n=" << data.trajectories.size() << " seed=" << data.seed
      << " policy=" << data.behaviorPolicyId << "\n";
  for (const Trajectory& tau : data.trajectories) {
    for (int h = 0; h < tau.length(); ++h) {
      if (h > 0) out << ' ';
      out << tau.steps[h].obs << ' ' << tau.steps[h].action << ' ' << tau.steps[h].reward;
    }
    out << '\n';
  }
  return out.str();
}

Dataset datasetFromText(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw StructuralError("dataset file is empty");
  Dataset data;
  std::size_t n = 0;
  {
    std::istringstream head(header);
    std::string token;
    bool haveN = false;
    while (head >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos)
        throw StructuralError("malformed dataset header token '" + token + "'");
      std::string key = token.substr(0, eq);
      std::string value = token.substr(eq + 1);
      if (key == "n") {
        n = std::stoull(value);
        haveN = true;
      } else if (key == "seed") {
        data.seed = std::stoull(value);
      } else if (key == "policy") {
        data.behaviorPolicyId = value;
      } else {
        throw StructuralError("unknown dataset header key '" + key + "'");
      }
    }
    if (!haveN) throw StructuralError("dataset header is missing n=<int>");
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Trajectory tau;
    StepRecord s;
    while (row >> s.obs >> s.action >> s.reward) tau.steps.push_back(s);
    if (!row.eof()) throw StructuralError("malformed trajectory line: " + line);
    data.trajectories.push_back(std::move(tau));
  }
  if (data.trajectories.size() != n)
    throw StructuralError("dataset header declares " + std::to_string(n) + " trajectories, found " +
                          std::to_string(data.trajectories.size()));
  return data;
}

json coverageReportToJson(const CoverageReport& report) {
  json j;
  j["c_a"] = finiteOrString(report.cA);
  j["c_h"] = stepCoefficients(report.cH);
  j["c_o"] = stepCoefficients(report.cO);
  j["c_f"] = stepCoefficients(report.cF);
  j["c_f_weighted"] = stepCoefficients(report.cFWeighted);
  j["c_h_monte_carlo"] = report.cHMonteCarlo;
  return j;
}

TabularPomdp loadPomdp(const std::string& path) {
  return pomdpFromJson(json::parse(readFile(path)));
}

Policy loadPolicy(const std::string& path) {
  return policyFromJson(json::parse(readFile(path)));
}

Dataset loadDataset(const std::string& path) { return datasetFromText(readFile(path)); }

void savePomdp(const TabularPomdp& model, const std::string& path) {
  writeFile(path, pomdpToJson(model).dump(2) + "\n");
}

void savePolicy(const Policy& policy, const std::string& path) {
  writeFile(path, policyToJson(policy).dump(2) + "\n");
}

void saveDataset(const Dataset& data, const std::string& path) {
  writeFile(path, datasetToText(data));
}

}  // namespace pomdpope
