#ifndef CELLSIM_WORKLOAD_ANOMALIES_H_
#define CELLSIM_WORKLOAD_ANOMALIES_H_

#include <array>
#include <cstdint>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "cellsim/common/sim_time.h"
#include "cellsim/workload/events.h"

namespace cellsim::workload {

class Cell;

enum class AnomalyKind { kUnmatchableConstraints, kOverUsageWindow, kCorruptRecord };
const char* ToString(AnomalyKind k);

struct AnomalyReport {
  AnomalyKind kind = AnomalyKind::kCorruptRecord;
  std::string detail;
  std::uint64_t count = 1;
  SimTime at = 0;
};

// One machine-parseable line: kind=<k> time=<us> count=<n> detail="<text>".
std::string FormatAnomaly(const AnomalyReport& r);

// Thread-safe collector shared by parsers and the tick loop.
class AnomalyLog {
 public:
  void add(AnomalyReport r);
  std::vector<AnomalyReport> drain();
  std::uint64_t total(AnomalyKind k) const;

 private:
  mutable std::mutex mu_;
  std::vector<AnomalyReport> pending_;
  std::array<std::uint64_t, 3> totals_{};
};

struct FilterResult {
  EventBatch batch;
  std::vector<AnomalyReport> reports;
  std::vector<TaskId> dropped_tasks;
};

// Drops AddTask events (and the rest of the dropped task's events in the
// batch) when the task's constraints match no node; constraint updates that
// share the submission timestamp count as the task's initial constraints.
// Flags, without dropping anything, a batch whose usage would push global
// used memory above global memory capacity.
FilterResult filter_anomalies(const Cell& cell, EventBatch batch);

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_ANOMALIES_H_
