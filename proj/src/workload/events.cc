#include "cellsim/workload/events.h"

#include <tuple>

namespace cellsim::workload {

const char* ToString(EventKind k) {
  switch (k) {
    case EventKind::kAddTask: return "AddTask";
    case EventKind::kUpdateTaskRequiredResources: return "UpdateTaskRequiredResources";
    case EventKind::kUpdateTaskUsedResources: return "UpdateTaskUsedResources";
    case EventKind::kUpdateTaskConstraints: return "UpdateTaskConstraints";
    case EventKind::kRemoveTask: return "RemoveTask";
    case EventKind::kAddNode: return "AddNode";
    case EventKind::kUpdateNodeTotalResources: return "UpdateNodeTotalResources";
    case EventKind::kAddNodeAttributes: return "AddNodeAttributes";
    case EventKind::kRemoveNodeAttributes: return "RemoveNodeAttributes";
    case EventKind::kRemoveNode: return "RemoveNode";
  }
  return "?";
}

bool WorkloadEvent::is_node_event() const {
  switch (kind()) {
    case EventKind::kAddNode:
    case EventKind::kUpdateNodeTotalResources:
    case EventKind::kAddNodeAttributes:
    case EventKind::kRemoveNodeAttributes:
    case EventKind::kRemoveNode:
      return true;
    default:
      return false;
  }
}

const std::string& WorkloadEvent::subject() const {
  return std::visit(
      [](const auto& p) -> const std::string& {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AddTask>) {
          return p.task.id;
        } else if constexpr (std::is_same_v<T, AddNode>) {
          return p.node.id;
        } else if constexpr (requires { p.task; }) {
          return p.task;
        } else {
          return p.node;
        }
      },
      payload);
}

int TiePriority(EventKind k) {
  switch (k) {
    case EventKind::kRemoveNode: return 0;
    case EventKind::kAddNode: return 1;
    case EventKind::kUpdateNodeTotalResources: return 2;
    case EventKind::kRemoveNodeAttributes: return 3;
    case EventKind::kAddNodeAttributes: return 4;
    case EventKind::kRemoveTask: return 5;
    case EventKind::kAddTask: return 6;
    case EventKind::kUpdateTaskRequiredResources: return 7;
    case EventKind::kUpdateTaskConstraints: return 8;
    case EventKind::kUpdateTaskUsedResources: return 9;
  }
  return 10;
}

bool EventLess(const WorkloadEvent& a, const WorkloadEvent& b) {
  return std::make_tuple(a.timestamp, TiePriority(a.kind()), a.source, a.seq) <
         std::make_tuple(b.timestamp, TiePriority(b.kind()), b.source, b.seq);
}

VectorSource::VectorSource(std::vector<WorkloadEvent> events, std::string name)
    : events_(std::move(events)), name_(std::move(name)) {}

const WorkloadEvent* VectorSource::peek() {
  return pos_ < events_.size() ? &events_[pos_] : nullptr;
}

void VectorSource::pop() {
  if (pos_ < events_.size()) ++pos_;
}

}  // namespace cellsim::workload
