#include "cellsim/workload/cell.h"

#include <algorithm>

#include "cellsim/common/errors.h"

namespace cellsim::workload {

using model::ResourceVector;

Cell::Cell(model::ResourceTypeCatalog catalog) : catalog_(std::move(catalog)) {}

std::optional<NodeIndex> Cell::find_node(const model::NodeId& id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TaskIndex> Cell::find_task(const model::TaskId& id) const {
  auto it = task_index_.find(id);
  if (it == task_index_.end()) return std::nullopt;
  return it->second;
}

void Cell::touch(NodeIndex n) {
  sums_[n].stale = true;
  if (!touched_flag_[n]) {
    touched_flag_[n] = 1;
    touched_.push_back(n);
  }
}

std::vector<NodeIndex> Cell::take_touched_nodes() {
  std::vector<NodeIndex> out;
  out.swap(touched_);
  for (NodeIndex n : out) touched_flag_[n] = 0;
  return out;
}

NodeIndex Cell::add_node(model::NodeSpec spec) {
  model::Validate(spec, dimension());
  auto it = node_index_.find(spec.id);
  if (it != node_index_.end()) {
    Node& n = nodes_[it->second];
    if (n.online) {
      n.spec.total = spec.total;
      for (auto& [k, v] : spec.attributes) n.spec.attributes[k] = v;
    } else {
      n.spec = std::move(spec);
      n.online = true;
      ++online_nodes_;
    }
    touch(it->second);
    return it->second;
  }
  const auto idx = static_cast<NodeIndex>(nodes_.size());
  node_index_.emplace(spec.id, idx);
  nodes_.push_back(Node{std::move(spec), true, {}});
  sums_.emplace_back();
  touched_flag_.push_back(0);
  ++online_nodes_;
  touch(idx);
  return idx;
}

std::vector<TaskIndex> Cell::remove_node(NodeIndex n) {
  Node& node = nodes_.at(n);
  if (!node.online) return {};
  std::vector<TaskIndex> displaced = std::move(node.residents);
  node.residents.clear();
  for (TaskIndex t : displaced) {
    tasks_[t].node = kNoIndex;
    pending_.insert(t);
  }
  node.online = false;
  --online_nodes_;
  touch(n);
  return displaced;
}

void Cell::set_node_total(NodeIndex n, ResourceVector total) {
  if (total.size() != dimension() || !total.all_non_negative()) {
    throw DomainError("invalid node total for " + nodes_.at(n).spec.id);
  }
  nodes_.at(n).spec.total = std::move(total);
  touch(n);
}

void Cell::add_node_attributes(NodeIndex n, const model::AttributeMap& attrs) {
  for (const auto& [k, v] : attrs) nodes_.at(n).spec.attributes[k] = v;
  touch(n);
}

void Cell::remove_node_attributes(NodeIndex n, const std::vector<std::string>& names) {
  for (const auto& k : names) nodes_.at(n).spec.attributes.erase(k);
  touch(n);
}

TaskIndex Cell::add_task(model::TaskSpec spec) {
  model::Validate(spec, dimension());
  if (task_index_.count(spec.id)) throw DomainError("duplicate task id " + spec.id);
  TaskIndex idx;
  if (!free_tasks_.empty()) {
    idx = free_tasks_.back();
    free_tasks_.pop_back();
  } else {
    idx = static_cast<TaskIndex>(tasks_.size());
    tasks_.emplace_back();
  }
  task_index_.emplace(spec.id, idx);
  tasks_[idx] = Task{std::move(spec), kNoIndex, true};
  pending_.insert(idx);
  ++tasks_added_;
  return idx;
}

NodeIndex Cell::remove_task(TaskIndex t) {
  Task& task = tasks_.at(t);
  if (!task.alive) throw LookupError("task slot not live");
  const NodeIndex was = task.node;
  if (was != kNoIndex) {
    auto& r = nodes_[was].residents;
    r.erase(std::find(r.begin(), r.end(), t));
    touch(was);
  } else {
    pending_.erase(t);
  }
  task_index_.erase(task.spec.id);
  task = Task{};
  free_tasks_.push_back(t);
  ++tasks_removed_;
  return was;
}

void Cell::set_task_required(TaskIndex t, ResourceVector required, int priority,
                             bool production) {
  Task& task = tasks_.at(t);
  if (required.size() != dimension() || !required.all_non_negative()) {
    throw DomainError("invalid required vector for " + task.spec.id);
  }
  task.spec.required = std::move(required);
  task.spec.priority = priority;
  task.spec.production = production;
  if (task.node != kNoIndex) touch(task.node);
}

void Cell::set_task_used(TaskIndex t, ResourceVector used, double migration_cost_mb) {
  Task& task = tasks_.at(t);
  if (used.size() != dimension() || !used.all_non_negative() || !(migration_cost_mb > 0)) {
    throw DomainError("invalid usage for " + task.spec.id);
  }
  task.spec.used = std::move(used);
  task.spec.migration_cost_mb = migration_cost_mb;
  task.spec.unstarted = false;
  if (task.node != kNoIndex) touch(task.node);
}

void Cell::set_task_constraints(TaskIndex t, std::vector<model::TaskConstraint> constraints) {
  Task& task = tasks_.at(t);
  task.spec.constraints = std::move(constraints);
  if (task.node != kNoIndex) touch(task.node);
}

void Cell::place(TaskIndex t, NodeIndex n) {
  Task& task = tasks_.at(t);
  if (!task.alive || task.node != kNoIndex) throw DomainError("task is not pending");
  if (!nodes_.at(n).online) throw DomainError("node is offline");
  pending_.erase(t);
  task.node = n;
  nodes_[n].residents.push_back(t);
  touch(n);
}

void Cell::move(TaskIndex t, NodeIndex n) {
  Task& task = tasks_.at(t);
  if (!task.alive || task.node == kNoIndex) throw DomainError("task is not placed");
  if (!nodes_.at(n).online) throw DomainError("node is offline");
  if (task.node == n) return;
  auto& r = nodes_[task.node].residents;
  r.erase(std::find(r.begin(), r.end(), t));
  touch(task.node);
  task.node = n;
  nodes_[n].residents.push_back(t);
  touch(n);
}

void Cell::unplace(TaskIndex t) {
  Task& task = tasks_.at(t);
  if (!task.alive || task.node == kNoIndex) return;
  auto& r = nodes_[task.node].residents;
  r.erase(std::find(r.begin(), r.end(), t));
  touch(task.node);
  task.node = kNoIndex;
  pending_.insert(t);
}

const Cell::Sums& Cell::sums(NodeIndex n) const {
  Sums& s = sums_[n];
  if (s.stale) {
    const std::size_t d = dimension();
    s.used = ResourceVector(d, 0.0);
    s.required = ResourceVector(d, 0.0);
    s.production = ResourceVector(d, 0.0);
    for (TaskIndex t : nodes_[n].residents) {
      const model::TaskSpec& spec = tasks_[t].spec;
      s.used += spec.used;
      s.required += spec.required;
      if (spec.production) s.production += spec.required;
    }
    s.stale = false;
  }
  return s;
}

const ResourceVector& Cell::used_sum(NodeIndex n) const { return sums(n).used; }
const ResourceVector& Cell::required_sum(NodeIndex n) const { return sums(n).required; }
const ResourceVector& Cell::production_required_sum(NodeIndex n) const {
  return sums(n).production;
}

model::SystemState Cell::to_system_state() const {
  std::vector<model::NodeSpec> nodes;
  std::vector<model::TaskSpec> tasks;
  model::Assignment assignment;
  for (const Node& n : nodes_) {
    if (!n.online) continue;
    nodes.push_back(n.spec);
    for (TaskIndex t : n.residents) {
      tasks.push_back(tasks_[t].spec);
      assignment.set(tasks_[t].spec.id, n.spec.id);
    }
  }
  return model::SystemState(catalog_, std::move(nodes), std::move(tasks), std::move(assignment));
}

ApplyOutcome apply_event(Cell& cell, const WorkloadEvent& e) {
  ApplyOutcome out;
  auto task_of = [&](const TaskId& id) -> bool {
    auto t = cell.find_task(id);
    if (!t) return false;
    out.task = *t;
    out.node = cell.task(*t).node;
    return true;
  };
  auto online_node_of = [&](const NodeId& id) -> bool {
    auto n = cell.find_node(id);
    if (!n || !cell.node(*n).online) return false;
    out.node = *n;
    return true;
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AddTask>) {
          if (cell.find_task(p.task.id)) return;
          out.task = cell.add_task(p.task);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, UpdateTaskRequiredResources>) {
          if (!task_of(p.task)) return;
          cell.set_task_required(out.task, p.required, p.priority, p.production);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, UpdateTaskUsedResources>) {
          if (!task_of(p.task)) return;
          cell.set_task_used(out.task, p.used, p.migration_cost_mb);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, UpdateTaskConstraints>) {
          if (!task_of(p.task)) return;
          cell.set_task_constraints(out.task, p.constraints);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, RemoveTask>) {
          if (!task_of(p.task)) return;
          cell.remove_task(out.task);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, AddNode>) {
          out.node = cell.add_node(p.node);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, UpdateNodeTotalResources>) {
          if (!online_node_of(p.node)) return;
          cell.set_node_total(out.node, p.total);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, AddNodeAttributes>) {
          if (!online_node_of(p.node)) return;
          cell.add_node_attributes(out.node, p.attributes);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, RemoveNodeAttributes>) {
          if (!online_node_of(p.node)) return;
          cell.remove_node_attributes(out.node, p.names);
          out.applied = true;
        } else if constexpr (std::is_same_v<T, RemoveNode>) {
          if (!online_node_of(p.node)) return;
          out.displaced = cell.remove_node(out.node);
          out.applied = true;
        }
      },
      e.payload);
  return out;
}

// --- JSON ------------------------------------------------------------------

nlohmann::json ToJson(const ResourceVector& v) { return v.to_std(); }

ResourceVector ResourceVectorFromJson(const nlohmann::json& j) {
  return ResourceVector(j.get<std::vector<double>>());
}

nlohmann::json ToJson(const model::TaskSpec& t) {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : t.constraints) {
    cs.push_back({static_cast<int>(c.op), c.attribute, c.value});
  }
  return {{"id", t.id},
          {"required", ToJson(t.required)},
          {"used", ToJson(t.used)},
          {"cost", t.migration_cost_mb},
          {"priority", t.priority},
          {"production", t.production},
          {"constraints", cs},
          {"unstarted", t.unstarted}};
}

model::TaskSpec TaskSpecFromJson(const nlohmann::json& j) {
  model::TaskSpec t;
  t.id = j.at("id").get<std::string>();
  t.required = ResourceVectorFromJson(j.at("required"));
  t.used = ResourceVectorFromJson(j.at("used"));
  t.migration_cost_mb = j.at("cost").get<double>();
  t.priority = j.at("priority").get<int>();
  t.production = j.at("production").get<bool>();
  for (const auto& c : j.at("constraints")) {
    t.constraints.push_back({static_cast<model::ConstraintOp>(c.at(0).get<int>()),
                             c.at(1).get<std::string>(), c.at(2).get<std::string>()});
  }
  t.unstarted = j.at("unstarted").get<bool>();
  return t;
}

nlohmann::json ToJson(const model::NodeSpec& n) {
  return {{"id", n.id}, {"total", ToJson(n.total)}, {"attributes", n.attributes}};
}

model::NodeSpec NodeSpecFromJson(const nlohmann::json& j) {
  model::NodeSpec n;
  n.id = j.at("id").get<std::string>();
  n.total = ResourceVectorFromJson(j.at("total"));
  n.attributes = j.at("attributes").get<model::AttributeMap>();
  return n;
}

nlohmann::json Cell::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : nodes_) {
    nodes.push_back({{"spec", ToJson(n.spec)}, {"online", n.online}, {"residents", n.residents}});
  }
  nlohmann::json tasks = nlohmann::json::array();
  for (const Task& t : tasks_) {
    if (!t.alive) {
      tasks.push_back(nullptr);
    } else {
      tasks.push_back({{"spec", ToJson(t.spec)}, {"node", t.node}});
    }
  }
  return {{"catalog", catalog_.names()},
          {"nodes", nodes},
          {"tasks", tasks},
          {"free", free_tasks_},
          {"pending", pending_},
          {"added", tasks_added_},
          {"removed", tasks_removed_}};
}

Cell Cell::from_json(const nlohmann::json& j) {
  Cell c(model::ResourceTypeCatalog(j.at("catalog").get<std::vector<std::string>>()));
  for (const auto& jn : j.at("nodes")) {
    Node n;
    n.spec = NodeSpecFromJson(jn.at("spec"));
    n.online = jn.at("online").get<bool>();
    n.residents = jn.at("residents").get<std::vector<TaskIndex>>();
    const auto idx = static_cast<NodeIndex>(c.nodes_.size());
    c.node_index_.emplace(n.spec.id, idx);
    if (n.online) ++c.online_nodes_;
    c.nodes_.push_back(std::move(n));
    c.sums_.emplace_back();
    c.touched_flag_.push_back(0);
  }
  for (const auto& jt : j.at("tasks")) {
    Task t;
    if (!jt.is_null()) {
      t.spec = TaskSpecFromJson(jt.at("spec"));
      t.node = jt.at("node").get<NodeIndex>();
      t.alive = true;
      c.task_index_.emplace(t.spec.id, static_cast<TaskIndex>(c.tasks_.size()));
    }
    c.tasks_.push_back(std::move(t));
  }
  c.free_tasks_ = j.at("free").get<std::vector<TaskIndex>>();
  for (TaskIndex t : j.at("pending").get<std::vector<TaskIndex>>()) c.pending_.insert(t);
  c.tasks_added_ = j.at("added").get<std::uint64_t>();
  c.tasks_removed_ = j.at("removed").get<std::uint64_t>();
  return c;
}

}  // namespace cellsim::workload
