#ifndef CELLSIM_MASB_SCS_H_
#define CELLSIM_MASB_SCS_H_

#include <cstdint>
#include <vector>

#include "cellsim/common/rng.h"
#include "cellsim/masb/scoring.h"
#include "cellsim/model/specs.h"

namespace cellsim::masb {

struct ScsConfig {
  int restarts = 25;
  int depth = 5;
  int stall_steps = 6;  // stop once the best set has not improved for this many steps
  void validate() const;
};

struct ScsResult {
  std::vector<std::size_t> selected;  // indices into the input task list, ascending
  std::vector<std::size_t> compulsory;
  bool overloaded = false;   // node needed relief before selection
  bool feasible = true;      // false: fell back to every removable task
  double fitness = 0.0;      // score(remaining) / cost(selected); +inf for zero cost
  double cost_mb = 0.0;
  model::ResourceVector remaining_used;
  model::ResourceVector remaining_production;
  std::uint64_t evaluations = 0;
};

// A task must leave when its constraints no longer match, its usage alone
// exceeds the node, or it is production and its declaration exceeds it.
bool is_compulsory(const model::NodeSpec& node, const model::TaskSpec& task);

// Node is overloaded when used, or production required, exceeds total.
bool node_overloaded(const model::ResourceVector& total, const model::ResourceVector& used,
                     const model::ResourceVector& production_required);

// Chooses tasks to offload: every compulsory task plus the subset found by a
// restarted shallow tabu search maximising SRAS(remaining used) divided by
// the selected migration cost, subject to the remaining tasks fitting the
// node on used resources and production declarations.
ScsResult select_candidate_services(const model::NodeSpec& node,
                                    const std::vector<const model::TaskSpec*>& tasks,
                                    const ScoringParams& params, const ScsConfig& cfg, Rng& rng);

}  // namespace cellsim::masb

#endif  // CELLSIM_MASB_SCS_H_
