#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "pomdpope/io.hpp"

using namespace pomdpope;
using nlohmann::json;
using pomdpope::testing::smallRandomInstance;

TEST_CASE("POMDP JSON round-trips bitwise") {
  TabularPomdp m = smallRandomInstance(71, 4, 3, 3, 2);
  json j = json::parse(pomdpToJson(m).dump());
  TabularPomdp back = pomdpFromJson(j);
  CHECK(back.horizon == m.horizon);
  CHECK(back.stateCounts == m.stateCounts);
  CHECK(back.obsCounts == m.obsCounts);
  CHECK(back.initialDist == m.initialDist);
  for (int h = 0; h + 1 < m.horizon; ++h)
    for (int a = 0; a < m.actionCount; ++a) CHECK(back.transitions[h][a] == m.transitions[h][a]);
  for (int h = 0; h < m.horizon; ++h) CHECK(back.emissions[h] == m.emissions[h]);
  CHECK(back.rewards == m.rewards);
}

TEST_CASE("POMDP loading re-validates the structure") {
  TabularPomdp m = smallRandomInstance(72);
  json j = pomdpToJson(m);
  j["initial_dist"][0] = j["initial_dist"][0].get<double>() + 0.5;
  CHECK_THROWS_AS(pomdpFromJson(j), StructuralError);
  j = pomdpToJson(m);
  j["emissions"][0][1].erase(0);  // ragged matrix
  CHECK_THROWS_AS(pomdpFromJson(j), StructuralError);
}

TEST_CASE("policies of every kind round-trip") {
  TabularPomdp m = smallRandomInstance(73);

  Policy memoryless = randomMemorylessPolicy(m, 74, 0.1);
  Policy back = policyFromJson(policyToJson(memoryless));
  CHECK(back.kind() == Policy::Kind::Memoryless);
  CHECK(back.id == memoryless.id);
  for (int h = 0; h < m.horizon; ++h)
    CHECK(back.memorylessTables()[h] == memoryless.memorylessTables()[h]);

  Policy open = Policy::openLoop({1, 0, 1});
  open.id = "open";
  back = policyFromJson(policyToJson(open));
  CHECK(back.kind() == Policy::Kind::OpenLoop);
  CHECK(back.openLoopActions() == open.openLoopActions());
  CHECK(back.id == "open");

  HardnessBundle bundle = theorem3Instance(4, false);
  const Policy& pi2 = bundle.targetPolicies[1];
  back = policyFromJson(policyToJson(pi2));
  CHECK(back.kind() == Policy::Kind::HistoryTable);
  CHECK(back.defaultDist() == pi2.defaultDist());
  CHECK(back.historyEntries() == pi2.historyEntries());
  CHECK(back.id == "pi2");

  json bad = policyToJson(open);
  bad["kind"] = "closed-loop";
  CHECK_THROWS_AS(policyFromJson(bad), StructuralError);
}

TEST_CASE("dataset text round-trips bitwise") {
  TabularPomdp m = smallRandomInstance(75);
  Policy pi = randomMemorylessPolicy(m, 76, 0.2);
  Dataset data = sampleDataset(m, pi, 50, 77);
  Dataset back = datasetFromText(datasetToText(data));
  CHECK(back.seed == data.seed);
  CHECK(back.behaviorPolicyId == data.behaviorPolicyId);
  REQUIRE(back.trajectories.size() == data.trajectories.size());
  for (std::size_t i = 0; i < data.trajectories.size(); ++i)
    for (int h = 0; h < m.horizon; ++h) {
      CHECK(back.trajectories[i].steps[h].obs == data.trajectories[i].steps[h].obs);
      CHECK(back.trajectories[i].steps[h].action == data.trajectories[i].steps[h].action);
      CHECK(back.trajectories[i].steps[h].reward == data.trajectories[i].steps[h].reward);
    }
  back.validateAgainst(m);
}

TEST_CASE("dataset parsing rejects malformed input") {
  CHECK_THROWS_AS(datasetFromText(""), StructuralError);
  CHECK_THROWS_AS(datasetFromText("header\n"), StructuralError);
  CHECK_THROWS_AS(datasetFromText("seed=1 policy=p\n"), StructuralError);
  CHECK_THROWS_AS(datasetFromText("n=1 extra=2\n0 0 0.5\n"), StructuralError);
  CHECK_THROWS_AS(datasetFromText("n=2 seed=1 policy=p\n0 0 0.5\n"), StructuralError);
  CHECK_THROWS_AS(datasetFromText("n=1 seed=1 policy=p\n0 zero 0.5\n"), StructuralError);
  Dataset ok = datasetFromText("n=1 seed=9 policy=p\n0 1 0.25 2 0 0.75\n");
  CHECK(ok.seed == 9);
  CHECK(ok.trajectories[0].length() == 2);
  CHECK(ok.trajectories[0].steps[1].obs == 2);
}

TEST_CASE("non-finite coefficients render as strings") {
  CHECK(finiteOrString(1.5) == json(1.5));
  CHECK(finiteOrString(kInf) == json("inf"));
  CHECK(finiteOrString(-kInf) == json("-inf"));
  CHECK(finiteOrString(std::nan("")) == json("nan"));

  HardnessBundle bundle = theorem6Instance(4, false);
  CoverageOptions options;
  CoverageReport report =
      coverageReport(bundle.modelClass.models[0], bundle.behaviorPolicy, options);
  json j = coverageReportToJson(report);
  bool sawInf = false;
  for (const json& c : j["c_o"]) sawInf |= c == json("inf");
  CHECK(sawInf);
  CHECK(j["c_a"] == json(2.0));
}

TEST_CASE("file helpers round-trip through disk") {
  TabularPomdp m = smallRandomInstance(78);
  Policy pi = randomMemorylessPolicy(m, 79, 0.2);
  Dataset data = sampleDataset(m, pi, 10, 80);
  savePomdp(m, "io_test_model.json");
  savePolicy(pi, "io_test_policy.json");
  saveDataset(data, "io_test_data.txt");
  TabularPomdp m2 = loadPomdp("io_test_model.json");
  Policy pi2 = loadPolicy("io_test_policy.json");
  Dataset data2 = loadDataset("io_test_data.txt");
  CHECK(m2.initialDist == m.initialDist);
  CHECK(pi2.id == pi.id);
  CHECK(data2.size() == data.size());
  CHECK_THROWS_AS(loadPomdp("io_test_missing.json"), Error);
}
