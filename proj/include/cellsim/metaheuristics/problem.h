#ifndef CELLSIM_METAHEURISTICS_PROBLEM_H_
#define CELLSIM_METAHEURISTICS_PROBLEM_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cellsim/model/system_state.h"

namespace cellsim::metaheuristics {

// Node choice per task, indexed by task position; values index targets.
using Genome = std::vector<std::uint16_t>;

struct GenomeHash {
  std::size_t operator()(const Genome& g) const;
};

// Dense form of a balancing instance. Stability is evaluated on required
// resources; tasks whose origin is not a target always pay their cost.
class Problem {
 public:
  static constexpr std::int32_t kNoOrigin = -1;

  // Targets default to every node of the state, in state order.
  static std::shared_ptr<const Problem> FromState(const model::SystemState& state,
                                                  std::vector<model::NodeId> targets = {});

  std::size_t task_count() const { return costs_.size(); }
  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t dims() const { return dims_; }

  double demand(std::size_t t, std::size_t d) const { return demand_[t * dims_ + d]; }
  double capacity(std::size_t n, std::size_t d) const { return capacity_[n * dims_ + d]; }
  double cost(std::size_t t) const { return costs_[t]; }
  std::int32_t origin(std::size_t t) const { return origin_[t]; }
  const std::string& task_id(std::size_t t) const { return task_ids_[t]; }
  const std::string& node_id(std::size_t n) const { return node_ids_[n]; }
  const model::SystemState& state() const { return state_; }

  // Genome of the starting assignment when every origin is a target.
  std::optional<Genome> origin_genome() const;

  // Converts a genome into a full assignment over the state's tasks.
  model::Assignment to_assignment(const Genome& g) const;

 private:
  Problem() = default;
  model::SystemState state_;
  std::size_t dims_ = 0;
  std::vector<double> demand_;
  std::vector<double> capacity_;
  std::vector<double> costs_;
  std::vector<std::int32_t> origin_;
  std::vector<std::string> task_ids_;
  std::vector<std::string> node_ids_;
};

// Assignment plus lazily derived stability, loads and transformation cost.
class CandidateSolution {
 public:
  CandidateSolution(std::shared_ptr<const Problem> problem, Genome genome);

  const Genome& genome() const { return genome_; }
  const Problem& problem() const { return *problem_; }
  bool stable() const;
  double stc() const;
  std::size_t moved() const;
  // Per node, per dimension: capacity minus summed demand (may be negative).
  const std::vector<double>& availability() const;
  model::Assignment assignment() const { return problem_->to_assignment(genome_); }

 private:
  void derive() const;
  std::shared_ptr<const Problem> problem_;
  Genome genome_;
  mutable std::once_flag once_;
  mutable bool stable_ = false;
  mutable double stc_ = 0.0;
  mutable std::size_t moved_ = 0;
  mutable std::vector<double> availability_;
};

using SolutionPtr = std::shared_ptr<const CandidateSolution>;

// Total order: stable first, then lower STC, fewer migrations, and finally
// the lexicographically smaller genome.
bool Better(const CandidateSolution& a, const CandidateSolution& b);

// Every assignment that differs from `g` in exactly one task.
std::vector<Genome> neighbors(const Genome& g, const Problem& p);

}  // namespace cellsim::metaheuristics

#endif  // CELLSIM_METAHEURISTICS_PROBLEM_H_
