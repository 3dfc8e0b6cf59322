#ifndef CELLSIM_MODEL_SYSTEM_STATE_H_
#define CELLSIM_MODEL_SYSTEM_STATE_H_

#include <cstddef>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cellsim/model/resource_vector.h"
#include "cellsim/model/specs.h"

namespace cellsim::model {

// Task -> node mapping.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::map<TaskId, NodeId> m) : map_(std::move(m)) {}

  const NodeId& at(const TaskId& t) const;
  bool contains(const TaskId& t) const { return map_.count(t) != 0; }
  void set(const TaskId& t, const NodeId& n) { map_[t] = n; }
  std::size_t size() const { return map_.size(); }
  const std::map<TaskId, NodeId>& map() const { return map_; }

  bool operator==(const Assignment&) const = default;

 private:
  std::map<TaskId, NodeId> map_;
};

// Which per-task vector feeds the availability sum.
enum class ResourceBasis { kRequired, kUsed };

// Immutable snapshot of nodes, tasks and the current assignment.
class SystemState {
 public:
  SystemState() = default;
  SystemState(ResourceTypeCatalog catalog, std::vector<NodeSpec> nodes,
              std::vector<TaskSpec> tasks, Assignment assignment);

  const ResourceTypeCatalog& catalog() const { return catalog_; }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  const Assignment& assignment() const { return assignment_; }

  const NodeSpec& node(const NodeId& id) const;
  const TaskSpec& task(const TaskId& id) const;
  bool has_node(const NodeId& id) const { return node_index_.count(id) != 0; }
  bool has_task(const TaskId& id) const { return task_index_.count(id) != 0; }
  std::size_t node_index(const NodeId& id) const;
  std::size_t task_index(const TaskId& id) const;

  // Tasks mapped to the node, in task-list order.
  const std::vector<std::size_t>& tasks_on(const NodeId& id) const;

  SystemState with_assignment(Assignment a) const;

 private:
  ResourceTypeCatalog catalog_;
  std::vector<NodeSpec> nodes_;
  std::vector<TaskSpec> tasks_;
  Assignment assignment_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<TaskId, std::size_t> task_index_;
  std::vector<std::vector<std::size_t>> residents_;
};

// a(n) - sum of r(t) over tasks on n. May be negative.
ResourceVector available_resources(const SystemState& state, const NodeId& node,
                                   ResourceBasis basis = ResourceBasis::kRequired);
bool is_node_stable(const SystemState& state, const NodeId& node,
                    ResourceBasis basis = ResourceBasis::kRequired);
bool is_system_stable(const SystemState& state,
                      ResourceBasis basis = ResourceBasis::kRequired);

double migration_cost(const TaskSpec& task, const Assignment& from, const Assignment& to);
double transformation_cost(const Assignment& from, const Assignment& to,
                           const std::vector<TaskSpec>& tasks);
bool is_neighbor(const Assignment& a, const Assignment& b);

using Move = std::pair<TaskId, NodeId>;
SystemState apply_moves(const SystemState& state, const std::vector<Move>& moves);

}  // namespace cellsim::model

#endif  // CELLSIM_MODEL_SYSTEM_STATE_H_
