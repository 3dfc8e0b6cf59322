#ifndef CELLSIM_WORKLOAD_EVENTS_H_
#define CELLSIM_WORKLOAD_EVENTS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cellsim/common/sim_time.h"
#include "cellsim/model/specs.h"

namespace cellsim::workload {

using model::AttributeMap;
using model::NodeId;
using model::ResourceVector;
using model::TaskId;

struct AddTask {
  model::TaskSpec task;
  bool operator==(const AddTask&) const = default;
};
struct UpdateTaskRequiredResources {
  TaskId task;
  ResourceVector required;
  int priority = 0;
  bool production = false;
  bool operator==(const UpdateTaskRequiredResources&) const = default;
};
struct UpdateTaskUsedResources {
  TaskId task;
  ResourceVector used;
  double migration_cost_mb = 1.0;
  // Machine the usage was measured on, when the trace records it.
  std::optional<NodeId> machine;
  bool operator==(const UpdateTaskUsedResources&) const = default;
};
struct UpdateTaskConstraints {
  TaskId task;
  std::vector<model::TaskConstraint> constraints;
  bool operator==(const UpdateTaskConstraints&) const = default;
};
struct RemoveTask {
  TaskId task;
  bool operator==(const RemoveTask&) const = default;
};
struct AddNode {
  model::NodeSpec node;
  bool operator==(const AddNode&) const = default;
};
struct UpdateNodeTotalResources {
  NodeId node;
  ResourceVector total;
  bool operator==(const UpdateNodeTotalResources&) const = default;
};
struct AddNodeAttributes {
  NodeId node;
  AttributeMap attributes;
  bool operator==(const AddNodeAttributes&) const = default;
};
struct RemoveNodeAttributes {
  NodeId node;
  std::vector<std::string> names;
  bool operator==(const RemoveNodeAttributes&) const = default;
};
struct RemoveNode {
  NodeId node;
  bool operator==(const RemoveNode&) const = default;
};

using EventPayload =
    std::variant<AddTask, UpdateTaskRequiredResources, UpdateTaskUsedResources,
                 UpdateTaskConstraints, RemoveTask, AddNode, UpdateNodeTotalResources,
                 AddNodeAttributes, RemoveNodeAttributes, RemoveNode>;

enum class EventKind {
  kAddTask,
  kUpdateTaskRequiredResources,
  kUpdateTaskUsedResources,
  kUpdateTaskConstraints,
  kRemoveTask,
  kAddNode,
  kUpdateNodeTotalResources,
  kAddNodeAttributes,
  kRemoveNodeAttributes,
  kRemoveNode,
};

const char* ToString(EventKind k);

struct WorkloadEvent {
  SimTime timestamp = 0;
  EventPayload payload;
  // Origin for tie-breaking: source index and position within that source.
  std::uint32_t source = 0;
  std::uint64_t seq = 0;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
  bool is_node_event() const;
  // Task id or node id the event refers to.
  const std::string& subject() const;

  bool operator==(const WorkloadEvent&) const = default;
};

// Rank among events sharing a timestamp: node events first, removals
// before additions.
int TiePriority(EventKind k);

// Strict weak order: timestamp, tie priority, source, seq.
bool EventLess(const WorkloadEvent& a, const WorkloadEvent& b);

struct EventBatch {
  SimTime window_start = 0;
  SimTime window_end = 0;
  std::vector<WorkloadEvent> events;
  bool end_of_trace = false;
};

// Pull-based ordered event stream.
class EventSource {
 public:
  virtual ~EventSource() = default;
  // Next event without consuming it; nullptr once exhausted.
  virtual const WorkloadEvent* peek() = 0;
  virtual void pop() = 0;
  virtual std::string name() const = 0;
};

// In-memory source over a pre-built list, mostly for tests and replays.
class VectorSource : public EventSource {
 public:
  VectorSource(std::vector<WorkloadEvent> events, std::string name = "vector");
  const WorkloadEvent* peek() override;
  void pop() override;
  std::string name() const override { return name_; }

 private:
  std::vector<WorkloadEvent> events_;
  std::size_t pos_ = 0;
  std::string name_;
};

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_EVENTS_H_
