#ifndef CELLSIM_WORKLOAD_CELL_H_
#define CELLSIM_WORKLOAD_CELL_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cellsim/model/system_state.h"
#include "cellsim/workload/events.h"

namespace cellsim::workload {

using NodeIndex = std::uint32_t;
using TaskIndex = std::uint32_t;
inline constexpr std::uint32_t kNoIndex = 0xffffffffu;

// Mutable live view of a simulated cell: nodes, tasks and placements.
// Node slots are never reused (removed nodes go offline); task slots are
// recycled through a free list. Per-node resource sums are recomputed from
// the resident list on demand, so they always equal a from-scratch fold.
class Cell {
 public:
  struct Node {
    model::NodeSpec spec;
    bool online = false;
    std::vector<TaskIndex> residents;
  };
  struct Task {
    model::TaskSpec spec;
    NodeIndex node = kNoIndex;
    bool alive = false;
  };

  Cell() = default;
  explicit Cell(model::ResourceTypeCatalog catalog);

  const model::ResourceTypeCatalog& catalog() const { return catalog_; }
  std::size_t dimension() const { return catalog_.dimension(); }

  std::size_t node_slots() const { return nodes_.size(); }
  const Node& node(NodeIndex n) const { return nodes_[n]; }
  std::optional<NodeIndex> find_node(const model::NodeId& id) const;
  std::size_t online_node_count() const { return online_nodes_; }

  std::size_t task_slots() const { return tasks_.size(); }
  const Task& task(TaskIndex t) const { return tasks_[t]; }
  std::optional<TaskIndex> find_task(const model::TaskId& id) const;
  std::size_t live_task_count() const { return task_index_.size(); }
  std::size_t placed_task_count() const { return task_index_.size() - pending_.size(); }
  const std::set<TaskIndex>& pending() const { return pending_; }

  std::uint64_t tasks_added() const { return tasks_added_; }
  std::uint64_t tasks_removed() const { return tasks_removed_; }

  // Adding a known offline node brings it back online with the new spec;
  // adding a known online node updates total and merges attributes.
  NodeIndex add_node(model::NodeSpec spec);
  // Resident tasks move to the pending set; returned in resident order.
  std::vector<TaskIndex> remove_node(NodeIndex n);
  void set_node_total(NodeIndex n, model::ResourceVector total);
  void add_node_attributes(NodeIndex n, const model::AttributeMap& attrs);
  void remove_node_attributes(NodeIndex n, const std::vector<std::string>& names);

  // New tasks start pending. Throws DomainError on duplicate ids.
  TaskIndex add_task(model::TaskSpec spec);
  // Returns the node the task was on, or kNoIndex if pending.
  NodeIndex remove_task(TaskIndex t);
  void set_task_required(TaskIndex t, model::ResourceVector required, int priority,
                         bool production);
  void set_task_used(TaskIndex t, model::ResourceVector used, double migration_cost_mb);
  void set_task_constraints(TaskIndex t, std::vector<model::TaskConstraint> constraints);

  void place(TaskIndex t, NodeIndex n);
  void move(TaskIndex t, NodeIndex n);
  void unplace(TaskIndex t);

  const model::ResourceVector& used_sum(NodeIndex n) const;
  const model::ResourceVector& required_sum(NodeIndex n) const;
  const model::ResourceVector& production_required_sum(NodeIndex n) const;

  // Nodes whose residents or resident vectors changed since the last call,
  // in first-touch order.
  std::vector<NodeIndex> take_touched_nodes();

  // Online nodes and placed tasks as an immutable model state.
  model::SystemState to_system_state() const;

  nlohmann::json to_json() const;
  static Cell from_json(const nlohmann::json& j);

 private:
  struct Sums {
    model::ResourceVector used, required, production;
    bool stale = true;
  };
  const Sums& sums(NodeIndex n) const;
  void touch(NodeIndex n);

  model::ResourceTypeCatalog catalog_;
  std::vector<Node> nodes_;
  std::vector<Task> tasks_;
  std::unordered_map<model::NodeId, NodeIndex> node_index_;
  std::unordered_map<model::TaskId, TaskIndex> task_index_;
  std::vector<TaskIndex> free_tasks_;
  std::set<TaskIndex> pending_;
  std::size_t online_nodes_ = 0;
  std::uint64_t tasks_added_ = 0;
  std::uint64_t tasks_removed_ = 0;
  mutable std::vector<Sums> sums_;
  std::vector<std::uint8_t> touched_flag_;
  std::vector<NodeIndex> touched_;
};

struct ApplyOutcome {
  bool applied = false;       // false when the event named an unknown id
  TaskIndex task = kNoIndex;  // task affected, if any
  NodeIndex node = kNoIndex;  // node affected (for RemoveTask: former host)
  std::vector<TaskIndex> displaced;  // RemoveNode: tasks sent back to pending
};

// Applies one event to the cell. Placement hints are not acted on here.
ApplyOutcome apply_event(Cell& cell, const WorkloadEvent& e);

nlohmann::json ToJson(const model::ResourceVector& v);
model::ResourceVector ResourceVectorFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const model::TaskSpec& t);
model::TaskSpec TaskSpecFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const model::NodeSpec& n);
model::NodeSpec NodeSpecFromJson(const nlohmann::json& j);

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_CELL_H_
