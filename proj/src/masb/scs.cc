#include "cellsim/masb/scs.h"

#include <algorithm>
#include <limits>
#include <set>
#include <string>

#include "cellsim/common/errors.h"
#include "cellsim/workload/constraints.h"

namespace cellsim::masb {

namespace {

struct Eval {
  bool feasible = false;
  double fitness = 0.0;
  double cost = 0.0;
  double excess = 0.0;  // summed overflow, guides infeasible steps
};

// Higher is better.
bool Preferred(const Eval& a, const Eval& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return a.excess < b.excess;
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.cost < b.cost;
}

}  // namespace

void ScsConfig::validate() const {
  if (restarts < 1 || depth < 1 || stall_steps < 1) {
    throw ConfigError("SCS restarts, depth and stall limit must be positive");
  }
}

bool node_overloaded(const model::ResourceVector& total, const model::ResourceVector& used,
                     const model::ResourceVector& production_required) {
  return !used.all_le(total) || !production_required.all_le(total);
}

bool is_compulsory(const model::NodeSpec& node, const model::TaskSpec& task) {
  if (!workload::matches_node(task, node)) return true;
  if (!task.used.all_le(node.total)) return true;
  return task.production && !task.required.all_le(node.total);
}

ScsResult select_candidate_services(const model::NodeSpec& node,
                                    const std::vector<const model::TaskSpec*>& tasks,
                                    const ScoringParams& params, const ScsConfig& cfg, Rng& rng) {
  const std::size_t D = node.total.size();
  ScsResult res;
  res.remaining_used = model::ResourceVector(D);
  res.remaining_production = model::ResourceVector(D);
  std::vector<std::size_t> removable;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = *tasks[i];
    if (is_compulsory(node, t)) {
      res.compulsory.push_back(i);
      res.cost_mb += t.migration_cost_mb;
      continue;
    }
    removable.push_back(i);
    res.remaining_used += t.used;
    if (t.production) res.remaining_production += t.required;
  }
  res.overloaded = node_overloaded(node.total, res.remaining_used, res.remaining_production);
  const double base_cost = res.cost_mb;
  auto finish_with = [&](const std::vector<char>& pick) {
    res.selected = res.compulsory;
    for (std::size_t k = 0; k < removable.size(); ++k) {
      if (!pick[k]) continue;
      const auto& t = *tasks[removable[k]];
      res.selected.push_back(removable[k]);
      res.cost_mb += t.migration_cost_mb;
      res.remaining_used -= t.used;
      if (t.production) res.remaining_production -= t.required;
    }
    std::sort(res.selected.begin(), res.selected.end());
    const double score = allocation_score(params, node.total, res.remaining_used);
    res.fitness = res.cost_mb > 0 ? score / res.cost_mb : std::numeric_limits<double>::infinity();
  };
  if (!res.overloaded) {
    finish_with(std::vector<char>(removable.size(), 0));
    return res;
  }

  const std::size_t n = removable.size();
  auto evaluate = [&](const std::vector<char>& pick) {
    ++res.evaluations;
    Eval e;
    model::ResourceVector used = res.remaining_used, prod = res.remaining_production;
    e.cost = base_cost;
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (!pick[k]) continue;
      any = true;
      const auto& t = *tasks[removable[k]];
      used -= t.used;
      if (t.production) prod -= t.required;
      e.cost += t.migration_cost_mb;
    }
    for (std::size_t d = 0; d < D; ++d) {
      e.excess += std::max(0.0, used[d] - node.total[d]) +
                  std::max(0.0, prod[d] - node.total[d]);
    }
    e.feasible = e.excess == 0.0 && (any || !res.compulsory.empty());
    if (e.feasible) {
      const double score = allocation_score(params, node.total, used);
      e.fitness = e.cost > 0 ? score / e.cost : std::numeric_limits<double>::infinity();
    }
    return e;
  };

  std::vector<char> best;
  Eval best_eval;
  int stall = 0;
  bool stop = false;
  for (int r = 0; r < cfg.restarts && !stop && n > 0; ++r) {
    std::vector<char> cur(n);
    for (auto& c : cur) c = static_cast<char>(rng() & 1);
    Eval cur_eval = evaluate(cur);
    std::set<std::string> visited;
    visited.insert(std::string(cur.begin(), cur.end()));
    auto consider = [&](const std::vector<char>& pick, const Eval& e) {
      if (best.empty() || Preferred(e, best_eval)) {
        best = pick;
        best_eval = e;
        stall = 0;
      } else if (best_eval.feasible && ++stall >= cfg.stall_steps) {
        stop = true;
      }
    };
    consider(cur, cur_eval);
    for (int step = 0; step < cfg.depth && !stop; ++step) {
      std::vector<char> next;
      Eval next_eval;
      for (std::size_t k = 0; k < n; ++k) {
        cur[k] ^= 1;
        std::string key(cur.begin(), cur.end());
        if (!visited.count(key)) {
          Eval e = evaluate(cur);
          if (next.empty() || Preferred(e, next_eval)) {
            next = cur;
            next_eval = e;
          }
        }
        cur[k] ^= 1;
      }
      if (next.empty()) break;
      cur = next;
      cur_eval = next_eval;
      visited.insert(std::string(cur.begin(), cur.end()));
      consider(cur, cur_eval);
    }
  }
  if (best.empty() || !best_eval.feasible) {
    res.feasible = false;
    finish_with(std::vector<char>(n, 1));
    return res;
  }
  finish_with(best);
  return res;
}

}  // namespace cellsim::masb
