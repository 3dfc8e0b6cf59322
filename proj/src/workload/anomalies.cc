#include "cellsim/workload/anomalies.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cellsim/workload/cell.h"
#include "cellsim/workload/constraints.h"

namespace cellsim::workload {

const char* ToString(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::kUnmatchableConstraints: return "UnmatchableConstraints";
    case AnomalyKind::kOverUsageWindow: return "OverUsageWindow";
    case AnomalyKind::kCorruptRecord: return "CorruptRecord";
  }
  return "?";
}

std::string FormatAnomaly(const AnomalyReport& r) {
  std::string detail;
  for (char c : r.detail) {
    if (c == '"' || c == '\\') detail.push_back('\\');
    detail.push_back(c == '\n' ? ' ' : c);
  }
  return std::string("kind=") + ToString(r.kind) + " time=" + std::to_string(r.at) +
         " count=" + std::to_string(r.count) + " detail=\"" + detail + "\"";
}

void AnomalyLog::add(AnomalyReport r) {
  std::lock_guard<std::mutex> lock(mu_);
  totals_[static_cast<int>(r.kind)] += r.count;
  pending_.push_back(std::move(r));
}

std::vector<AnomalyReport> AnomalyLog::drain() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<AnomalyReport> out;
  out.swap(pending_);
  return out;
}

std::uint64_t AnomalyLog::total(AnomalyKind k) const {
  std::lock_guard<std::mutex> lock(mu_);
  return totals_[static_cast<int>(k)];
}

namespace {

std::string ConstraintKey(const std::vector<TaskConstraint>& cs) {
  std::string key;
  for (const auto& c : cs) {
    key += std::to_string(static_cast<int>(c.op));
    key += '\x1f';
    key += c.attribute;
    key += '\x1f';
    key += c.value;
    key += '\x1e';
  }
  return key;
}

}  // namespace

FilterResult filter_anomalies(const Cell& cell, EventBatch batch) {
  FilterResult result;

  // Attribute sets of nodes visible during this batch.
  std::vector<const AttributeMap*> attribute_sets;
  for (std::size_t n = 0; n < cell.node_slots(); ++n) {
    if (cell.node(static_cast<NodeIndex>(n)).online) {
      attribute_sets.push_back(&cell.node(static_cast<NodeIndex>(n)).spec.attributes);
    }
  }
  std::map<NodeId, AttributeMap> batch_nodes;
  for (const auto& e : batch.events) {
    if (const auto* a = std::get_if<AddNode>(&e.payload)) batch_nodes[a->node.id] = a->node.attributes;
    if (const auto* a = std::get_if<AddNodeAttributes>(&e.payload)) {
      if (!cell.find_node(a->node) || batch_nodes.count(a->node)) {
        for (const auto& [k, v] : a->attributes) batch_nodes[a->node][k] = v;
      }
    }
  }
  for (const auto& [id, attrs] : batch_nodes) attribute_sets.push_back(&attrs);

  // Initial constraints: a constraint update at the submission timestamp.
  std::unordered_map<TaskId, std::pair<SimTime, const std::vector<TaskConstraint>*>> initial;
  std::unordered_map<TaskId, SimTime> submitted;
  for (const auto& e : batch.events) {
    if (const auto* a = std::get_if<AddTask>(&e.payload)) {
      submitted[a->task.id] = e.timestamp;
      initial[a->task.id] = {e.timestamp, &a->task.constraints};
    } else if (const auto* u = std::get_if<UpdateTaskConstraints>(&e.payload)) {
      auto s = submitted.find(u->task);
      if (s != submitted.end() && s->second == e.timestamp) {
        initial[u->task] = {e.timestamp, &u->constraints};
      }
    }
  }

  std::unordered_map<std::string, bool> matchable_cache;
  std::unordered_set<TaskId> dropped;
  std::uint64_t dropped_count = 0;
  for (const auto& [task, entry] : initial) {
    const auto& cs = *entry.second;
    if (cs.empty()) continue;
    const std::string key = ConstraintKey(cs);
    auto it = matchable_cache.find(key);
    if (it == matchable_cache.end()) {
      bool any = false;
      for (const AttributeMap* attrs : attribute_sets) {
        if (matches_constraints(cs, *attrs)) {
          any = true;
          break;
        }
      }
      it = matchable_cache.emplace(key, any).first;
    }
    if (!it->second) dropped.insert(task);
  }

  const auto mem_index = cell.catalog().index_of("memory");
  std::unordered_map<TaskId, double> latest_mem;
  std::vector<WorkloadEvent> kept;
  kept.reserve(batch.events.size());
  for (auto& e : batch.events) {
    if (!e.is_node_event() && dropped.count(e.subject())) {
      if (e.kind() == EventKind::kAddTask) {
        ++dropped_count;
        result.dropped_tasks.push_back(e.subject());
      }
      continue;
    }
    if (mem_index) {
      if (const auto* u = std::get_if<UpdateTaskUsedResources>(&e.payload)) {
        latest_mem[u->task] = u->used[*mem_index];
      }
    }
    kept.push_back(std::move(e));
  }
  std::sort(result.dropped_tasks.begin(), result.dropped_tasks.end());
  if (dropped_count) {
    std::string ids;
    for (std::size_t i = 0; i < result.dropped_tasks.size() && i < 5; ++i) {
      ids += (i ? "," : "") + result.dropped_tasks[i];
    }
    result.reports.push_back({AnomalyKind::kUnmatchableConstraints,
                              "tasks dropped, constraints match no node: " + ids, dropped_count,
                              batch.window_start});
  }

  if (mem_index && !latest_mem.empty()) {
    double used = 0.0;
    double capacity = 0.0;
    for (std::size_t n = 0; n < cell.node_slots(); ++n) {
      const auto& node = cell.node(static_cast<NodeIndex>(n));
      if (!node.online) continue;
      capacity += node.spec.total[*mem_index];
      used += cell.used_sum(static_cast<NodeIndex>(n))[*mem_index];
    }
    for (const auto& [task, mem] : latest_mem) {
      auto t = cell.find_task(task);
      if (!t) continue;
      const auto& ct = cell.task(*t);
      if (ct.node != kNoIndex) used += mem - ct.spec.used[*mem_index];
    }
    if (capacity > 0 && used > capacity) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "global memory usage %.1f%% of capacity",
                    100.0 * used / capacity);
      result.reports.push_back({AnomalyKind::kOverUsageWindow, buf, 1, batch.window_start});
    }
  }

  batch.events = std::move(kept);
  result.batch = std::move(batch);
  return result;
}

}  // namespace cellsim::workload
