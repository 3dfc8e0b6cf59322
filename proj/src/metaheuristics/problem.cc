#include "cellsim/metaheuristics/problem.h"

#include <limits>
#include <unordered_map>

#include "cellsim/common/errors.h"

namespace cellsim::metaheuristics {

std::size_t GenomeHash::operator()(const Genome& g) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint16_t v : g) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

std::shared_ptr<const Problem> Problem::FromState(const model::SystemState& state,
                                                  std::vector<model::NodeId> targets) {
  std::shared_ptr<Problem> p(new Problem());
  p->state_ = state;
  p->dims_ = state.catalog().dimension();
  if (targets.empty()) {
    for (const auto& n : state.nodes()) targets.push_back(n.id);
  }
  if (targets.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw DomainError("too many target nodes");
  }
  std::unordered_map<model::NodeId, std::int32_t> target_index;
  for (const auto& id : targets) {
    const auto& node = state.node(id);
    if (!target_index.emplace(id, static_cast<std::int32_t>(p->node_ids_.size())).second) {
      throw DomainError("duplicate target node " + id);
    }
    p->node_ids_.push_back(id);
    for (double c : node.total) p->capacity_.push_back(c);
  }
  for (const auto& t : state.tasks()) {
    p->task_ids_.push_back(t.id);
    p->costs_.push_back(t.migration_cost_mb);
    for (double r : t.required) p->demand_.push_back(r);
    auto it = target_index.find(state.assignment().at(t.id));
    p->origin_.push_back(it == target_index.end() ? kNoOrigin : it->second);
  }
  return p;
}

std::optional<Genome> Problem::origin_genome() const {
  Genome g(task_count());
  for (std::size_t t = 0; t < task_count(); ++t) {
    if (origin_[t] == kNoOrigin) return std::nullopt;
    g[t] = static_cast<std::uint16_t>(origin_[t]);
  }
  return g;
}

model::Assignment Problem::to_assignment(const Genome& g) const {
  model::Assignment a;
  for (std::size_t t = 0; t < task_count(); ++t) a.set(task_ids_[t], node_ids_[g[t]]);
  return a;
}

CandidateSolution::CandidateSolution(std::shared_ptr<const Problem> problem, Genome genome)
    : problem_(std::move(problem)), genome_(std::move(genome)) {
  if (genome_.size() != problem_->task_count()) throw DomainError("genome length mismatch");
  for (auto n : genome_) {
    if (n >= problem_->node_count()) throw DomainError("genome references unknown node");
  }
}

void CandidateSolution::derive() const {
  std::call_once(once_, [this] {
    const Problem& p = *problem_;
    const std::size_t d = p.dims();
    availability_.assign(p.node_count() * d, 0.0);
    for (std::size_t n = 0; n < p.node_count(); ++n) {
      for (std::size_t i = 0; i < d; ++i) availability_[n * d + i] = p.capacity(n, i);
    }
    stc_ = 0.0;
    moved_ = 0;
    for (std::size_t t = 0; t < p.task_count(); ++t) {
      const std::size_t n = genome_[t];
      for (std::size_t i = 0; i < d; ++i) availability_[n * d + i] -= p.demand(t, i);
      if (static_cast<std::int32_t>(n) != p.origin(t)) {
        stc_ += p.cost(t);
        ++moved_;
      }
    }
    stable_ = true;
    for (double f : availability_) {
      if (!(f >= 0.0)) {
        stable_ = false;
        break;
      }
    }
  });
}

bool CandidateSolution::stable() const {
  derive();
  return stable_;
}
double CandidateSolution::stc() const {
  derive();
  return stc_;
}
std::size_t CandidateSolution::moved() const {
  derive();
  return moved_;
}
const std::vector<double>& CandidateSolution::availability() const {
  derive();
  return availability_;
}

bool Better(const CandidateSolution& a, const CandidateSolution& b) {
  if (a.stable() != b.stable()) return a.stable();
  if (a.stc() != b.stc()) return a.stc() < b.stc();
  if (a.moved() != b.moved()) return a.moved() < b.moved();
  return a.genome() < b.genome();
}

std::vector<Genome> neighbors(const Genome& g, const Problem& p) {
  std::vector<Genome> out;
  if (p.node_count() < 2) return out;
  out.reserve(g.size() * (p.node_count() - 1));
  for (std::size_t t = 0; t < g.size(); ++t) {
    for (std::size_t n = 0; n < p.node_count(); ++n) {
      if (n == g[t]) continue;
      Genome next = g;
      next[t] = static_cast<std::uint16_t>(n);
      out.push_back(std::move(next));
    }
  }
  return out;
}

}  // namespace cellsim::metaheuristics
