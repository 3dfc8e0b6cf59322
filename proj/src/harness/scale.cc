#include "cellsim/harness/scale.h"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "cellsim/common/errors.h"
#include "cellsim/common/rng.h"

namespace cellsim::harness {

using workload::WorkloadEvent;

std::string CloneId(const std::string& id, int k) {
  return k == 0 ? id : id + "~" + std::to_string(k);
}

namespace {

// Rewrites every id in the payload; `note` sees (kind prefix, original id).
template <typename Note>
WorkloadEvent Clone(const WorkloadEvent& e, int k, Note&& note) {
  WorkloadEvent c = e;
  auto task = [&](std::string& id) {
    note('t', id);
    id = CloneId(id, k);
  };
  auto node = [&](std::string& id) {
    note('n', id);
    id = CloneId(id, k);
  };
  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, workload::AddTask>) {
          task(p.task.id);
        } else if constexpr (std::is_same_v<T, workload::UpdateTaskUsedResources>) {
          task(p.task);
          if (p.machine) node(*p.machine);
        } else if constexpr (std::is_same_v<T, workload::AddNode>) {
          node(p.node.id);
        } else if constexpr (std::is_same_v<T, workload::UpdateTaskRequiredResources> ||
                             std::is_same_v<T, workload::UpdateTaskConstraints> ||
                             std::is_same_v<T, workload::RemoveTask>) {
          task(p.task);
        } else {
          node(p.node);
        }
      },
      c.payload);
  return c;
}

}  // namespace

ScaledSource::ScaledSource(std::unique_ptr<workload::EventSource> inner, int factor)
    : inner_(std::move(inner)), factor_(factor) {
  if (factor_ < 1) throw ConfigError("scale factor must be >= 1");
}

std::string ScaledSource::name() const {
  return inner_->name() + " x" + std::to_string(factor_);
}

void ScaledSource::check(const std::string& key) {
  if (clones_.count(key)) throw TraceError("scaled id collides with original id " + key.substr(2));
  originals_.insert(key);
}

void ScaledSource::refill() {
  if (!ready_.empty()) return;
  const WorkloadEvent* e = inner_->peek();
  if (!e) return;
  if (factor_ == 1) {
    ready_.push_back(*e);
    inner_->pop();
    return;
  }
  for (int k = 0; k < factor_; ++k) {
    WorkloadEvent c = Clone(*e, k, [&](char kind, const std::string& id) {
      const std::string key = std::string(1, kind) + ":" + id;
      if (k == 0) {
        check(key);
      } else {
        const std::string clone = std::string(1, kind) + ":" + CloneId(id, k);
        if (originals_.count(clone)) throw TraceError("scaled id collides with original id " + clone.substr(2));
        clones_.insert(clone);
      }
    });
    c.seq = e->seq * static_cast<std::uint64_t>(factor_) + static_cast<std::uint64_t>(k);
    ready_.push_back(std::move(c));
  }
  inner_->pop();
}

const WorkloadEvent* ScaledSource::peek() {
  refill();
  return ready_.empty() ? nullptr : &ready_.front();
}

void ScaledSource::pop() {
  refill();
  if (!ready_.empty()) ready_.pop_front();
}

std::vector<WorkloadEvent> scale_events(const std::vector<WorkloadEvent>& in, int factor) {
  ScaledSource s(std::make_unique<workload::VectorSource>(in), factor);
  std::vector<WorkloadEvent> out;
  while (const WorkloadEvent* e = s.peek()) {
    out.push_back(*e);
    s.pop();
  }
  return out;
}

CompactionResult compact_cell(workload::Cell& cell, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0 && fraction < 1)) throw ConfigError("compaction fraction must lie in [0,1)");
  std::vector<NodeIndex> online;
  for (NodeIndex n = 0; n < cell.node_slots(); ++n) {
    if (cell.node(n).online) online.push_back(n);
  }
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(online.size())));
  Rng rng(seed);
  CompactionResult out;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(online[i], online[i + rng.below(online.size() - i)]);
    out.removed.push_back(cell.node(online[i]).spec.id);
    auto displaced = cell.remove_node(online[i]);
    out.displaced.insert(out.displaced.end(), displaced.begin(), displaced.end());
  }
  return out;
}

}  // namespace cellsim::harness
