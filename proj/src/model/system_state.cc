#include "cellsim/model/system_state.h"

#include "cellsim/common/errors.h"

namespace cellsim::model {

const NodeId& Assignment::at(const TaskId& t) const {
  auto it = map_.find(t);
  if (it == map_.end()) throw LookupError("task not assigned: " + t);
  return it->second;
}

SystemState::SystemState(ResourceTypeCatalog catalog, std::vector<NodeSpec> nodes,
                         std::vector<TaskSpec> tasks, Assignment assignment)
    : catalog_(std::move(catalog)),
      nodes_(std::move(nodes)),
      tasks_(std::move(tasks)),
      assignment_(std::move(assignment)) {
  const std::size_t dim = catalog_.dimension();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Validate(nodes_[i], dim);
    if (!node_index_.emplace(nodes_[i].id, i).second) {
      throw DomainError("duplicate node id " + nodes_[i].id);
    }
  }
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    Validate(tasks_[i], dim);
    if (!task_index_.emplace(tasks_[i].id, i).second) {
      throw DomainError("duplicate task id " + tasks_[i].id);
    }
  }
  if (assignment_.size() != tasks_.size()) {
    throw DomainError("assignment must map every task exactly once");
  }
  residents_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    auto it = assignment_.map().find(tasks_[i].id);
    if (it == assignment_.map().end()) {
      throw DomainError("task " + tasks_[i].id + " is unassigned");
    }
    auto n = node_index_.find(it->second);
    if (n == node_index_.end()) {
      throw LookupError("assignment references unknown node " + it->second);
    }
    residents_[n->second].push_back(i);
  }
}

std::size_t SystemState::node_index(const NodeId& id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw LookupError("unknown node " + id);
  return it->second;
}

std::size_t SystemState::task_index(const TaskId& id) const {
  auto it = task_index_.find(id);
  if (it == task_index_.end()) throw LookupError("unknown task " + id);
  return it->second;
}

const NodeSpec& SystemState::node(const NodeId& id) const { return nodes_[node_index(id)]; }
const TaskSpec& SystemState::task(const TaskId& id) const { return tasks_[task_index(id)]; }

const std::vector<std::size_t>& SystemState::tasks_on(const NodeId& id) const {
  return residents_[node_index(id)];
}

SystemState SystemState::with_assignment(Assignment a) const {
  return SystemState(catalog_, nodes_, tasks_, std::move(a));
}

ResourceVector available_resources(const SystemState& state, const NodeId& node,
                                   ResourceBasis basis) {
  ResourceVector f = state.node(node).total;
  for (std::size_t t : state.tasks_on(node)) {
    const TaskSpec& task = state.tasks()[t];
    f -= basis == ResourceBasis::kRequired ? task.required : task.used;
  }
  return f;
}

bool is_node_stable(const SystemState& state, const NodeId& node, ResourceBasis basis) {
  return available_resources(state, node, basis).all_non_negative();
}

bool is_system_stable(const SystemState& state, ResourceBasis basis) {
  for (const NodeSpec& n : state.nodes()) {
    if (!is_node_stable(state, n.id, basis)) return false;
  }
  return true;
}

double migration_cost(const TaskSpec& task, const Assignment& from, const Assignment& to) {
  return from.at(task.id) == to.at(task.id) ? 0.0 : task.migration_cost_mb;
}

double transformation_cost(const Assignment& from, const Assignment& to,
                           const std::vector<TaskSpec>& tasks) {
  double total = 0.0;
  for (const TaskSpec& t : tasks) total += migration_cost(t, from, to);
  return total;
}

bool is_neighbor(const Assignment& a, const Assignment& b) {
  if (a.size() != b.size()) throw DomainError("assignments cover different task sets");
  std::size_t diff = 0;
  auto ib = b.map().begin();
  for (const auto& [task, node] : a.map()) {
    if (ib->first != task) throw DomainError("assignments cover different task sets");
    if (ib->second != node) ++diff;
    ++ib;
  }
  return diff == 1;
}

SystemState apply_moves(const SystemState& state, const std::vector<Move>& moves) {
  Assignment next = state.assignment();
  for (const auto& [task, node] : moves) {
    if (!state.has_task(task)) throw LookupError("unknown task " + task);
    if (!state.has_node(node)) throw LookupError("unknown node " + node);
    next.set(task, node);
  }
  return state.with_assignment(std::move(next));
}

}  // namespace cellsim::model
