#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pomdpope/model.hpp"

namespace pomdpope {

/// One (observation, action) pair of a history.
struct OaPair {
  int obs = 0;
  int action = 0;
  friend bool operator==(const OaPair&, const OaPair&) = default;
};

using HistoryView = std::span<const OaPair>;

/// Histories are packed into strings keyed by per-step (o, a) index, giving
/// stable map keys for HistoryTable lookups and enumeration caches.
std::string encodeHistory(HistoryView history);

/// Behavior/target policy. Three kinds:
///  - Memoryless: per-step tables pi_h(a | o)
///  - OpenLoop: one fixed action per step
///  - HistoryTable: explicit (step, encoded history, obs) -> distribution map
///    with a declared default distribution for unlisted histories.
class Policy {
 public:
  enum class Kind { Memoryless, OpenLoop, HistoryTable };

  static Policy memoryless(std::vector<Matrix> tables);  // tables[h] is A x |O_h|
  static Policy uniformMemoryless(const TabularPomdp& model);
  static Policy openLoop(std::vector<int> actions);
  static Policy historyTable(int actionCount, Vector defaultDist,
                             std::map<std::tuple<int, std::string, int>, Vector> entries);

  Kind kind() const { return kind_; }
  bool memorylessFlag() const { return kind_ == Kind::Memoryless || kind_ == Kind::OpenLoop; }

  /// Action distribution at 0-based step h given history tau_{h-1} and o_h.
  Vector actionDist(int step, HistoryView history, int obs) const;
  double actionProb(int step, HistoryView history, int obs, int action) const;

  int actionCount() const { return actionCount_; }
  std::string id;

  // Introspection for serialization.
  const std::vector<Matrix>& memorylessTables() const { return tables_; }
  const std::vector<int>& openLoopActions() const { return openLoopActions_; }
  const Vector& defaultDist() const { return defaultDist_; }
  const std::map<std::tuple<int, std::string, int>, Vector>& historyEntries() const {
    return entries_;
  }

 private:
  Kind kind_ = Kind::Memoryless;
  int actionCount_ = 0;
  std::vector<Matrix> tables_;
  std::vector<int> openLoopActions_;
  Vector defaultDist_;
  std::map<std::tuple<int, std::string, int>, Vector> entries_;

  static void checkDist(const Vector& d, const std::string& what);
};

}  // namespace pomdpope
