#ifndef CELLSIM_HARNESS_SCALE_H_
#define CELLSIM_HARNESS_SCALE_H_

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "cellsim/workload/cell.h"
#include "cellsim/workload/events.h"

namespace cellsim::harness {

using workload::kNoIndex;
using workload::NodeIndex;
using workload::TaskIndex;

// Id of the k-th clone of an object; k = 0 is the original.
std::string CloneId(const std::string& id, int k);

// Multiplies a cell: every event is repeated for each clone with node, task
// and machine ids rewritten. Throws TraceError if a derived id collides with
// an original one.
class ScaledSource : public workload::EventSource {
 public:
  ScaledSource(std::unique_ptr<workload::EventSource> inner, int factor);
  const workload::WorkloadEvent* peek() override;
  void pop() override;
  std::string name() const override;

 private:
  void refill();
  void check(const std::string& original);

  std::unique_ptr<workload::EventSource> inner_;
  int factor_;
  std::deque<workload::WorkloadEvent> ready_;
  std::unordered_set<std::string> originals_;
  std::unordered_set<std::string> clones_;
};

// Whole-stream variant used by tests.
std::vector<workload::WorkloadEvent> scale_events(const std::vector<workload::WorkloadEvent>& in,
                                                  int factor);

struct CompactionResult {
  std::vector<model::NodeId> removed;
  std::vector<TaskIndex> displaced;
};

// Removes floor(fraction * online nodes) uniformly chosen nodes; their
// tasks go back to pending.
CompactionResult compact_cell(workload::Cell& cell, double fraction, std::uint64_t seed);

}  // namespace cellsim::harness

#endif  // CELLSIM_HARNESS_SCALE_H_
