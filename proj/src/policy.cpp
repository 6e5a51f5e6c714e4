#include "pomdpope/policy.hpp"

#include <cmath>

namespace pomdpope {

std::string encodeHistory(HistoryView history) {
  // Radix string: one '<o>,<a>;' token per step. Stable and unambiguous for
  // arbitrary per-step space sizes.
  std::string key;
  key.reserve(history.size() * 4);
  for (const OaPair& oa : history) {
    key += std::to_string(oa.obs);
    key += ',';
    key += std::to_string(oa.action);
    key += ';';
  }
  return key;
}

void Policy::checkDist(const Vector& d, const std::string& what) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] < 0.0) throw StructuralError(what + ": negative action probability");
    sum += d[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw StructuralError(what + ": action distribution sums to " + std::to_string(sum));
}

Policy Policy::memoryless(std::vector<Matrix> tables) {
  Policy p;
  p.kind_ = Kind::Memoryless;
  if (tables.empty()) throw StructuralError("memoryless policy needs at least one step table");
  p.actionCount_ = static_cast<int>(tables[0].rows());
  for (std::size_t h = 0; h < tables.size(); ++h) {
    if (tables[h].rows() != p.actionCount_)
      throw StructuralError("memoryless policy: inconsistent action count at step " +
                            std::to_string(h));
    checkColumnStochastic(tables[h], "policy table (h=" + std::to_string(h) + ")");
  }
  p.tables_ = std::move(tables);
  return p;
}

Policy Policy::uniformMemoryless(const TabularPomdp& model) {
  std::vector<Matrix> tables;
  tables.reserve(model.horizon);
  for (int h = 0; h < model.horizon; ++h)
    tables.push_back(Matrix::Constant(model.actionCount, model.obsCounts[h],
                                      1.0 / model.actionCount));
  Policy p = memoryless(std::move(tables));
  p.id = "uniform";
  return p;
}

Policy Policy::openLoop(std::vector<int> actions) {
  Policy p;
  p.kind_ = Kind::OpenLoop;
  if (actions.empty()) throw StructuralError("open-loop policy needs at least one action");
  int maxAction = 0;
  for (int a : actions) {
    if (a < 0) throw StructuralError("open-loop policy: negative action");
    maxAction = std::max(maxAction, a);
  }
  p.actionCount_ = maxAction + 1;
  p.openLoopActions_ = std::move(actions);
  return p;
}

Policy Policy::historyTable(int actionCount, Vector defaultDist,
                            std::map<std::tuple<int, std::string, int>, Vector> entries) {
  Policy p;
  p.kind_ = Kind::HistoryTable;
  p.actionCount_ = actionCount;
  if (defaultDist.size() != actionCount)
    throw StructuralError("history-table policy: default distribution has wrong dimension");
  checkDist(defaultDist, "history-table default");
  for (const auto& [key, dist] : entries) {
    if (dist.size() != actionCount)
      throw StructuralError("history-table policy: entry distribution has wrong dimension");
    checkDist(dist, "history-table entry");
  }
  p.defaultDist_ = std::move(defaultDist);
  p.entries_ = std::move(entries);
  return p;
}

Vector Policy::actionDist(int step, HistoryView history, int obs) const {
  switch (kind_) {
    case Kind::Memoryless: {
      if (step >= static_cast<int>(tables_.size()))
        throw StructuralError("memoryless policy queried past its horizon");
      return tables_[step].col(obs);
    }
    case Kind::OpenLoop: {
      if (step >= static_cast<int>(openLoopActions_.size()))
        throw StructuralError("open-loop policy queried past its horizon");
      Vector d = Vector::Zero(actionCount_);
      d[openLoopActions_[step]] = 1.0;
      return d;
    }
    case Kind::HistoryTable: {
      auto it = entries_.find({step, encodeHistory(history), obs});
      if (it != entries_.end()) return it->second;
      return defaultDist_;
    }
  }
  throw StructuralError("unknown policy kind");
}

double Policy::actionProb(int step, HistoryView history, int obs, int action) const {
  // Open-loop fast path avoids materializing a vector in inner loops.
  if (kind_ == Kind::OpenLoop) {
    if (step >= static_cast<int>(openLoopActions_.size()))
      throw StructuralError("open-loop policy queried past its horizon");
    return openLoopActions_[step] == action ? 1.0 : 0.0;
  }
  if (kind_ == Kind::Memoryless) {
    if (step >= static_cast<int>(tables_.size()))
      throw StructuralError("memoryless policy queried past its horizon");
    return tables_[step](action, obs);
  }
  return actionDist(step, history, obs)[action];
}

}  // namespace pomdpope
