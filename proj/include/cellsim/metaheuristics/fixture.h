#ifndef CELLSIM_METAHEURISTICS_FIXTURE_H_
#define CELLSIM_METAHEURISTICS_FIXTURE_H_

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cellsim/metaheuristics/problem.h"
#include "cellsim/metaheuristics/strategies.h"
#include "cellsim/model/system_state.h"

namespace cellsim::metaheuristics {

struct FixtureTask {
  std::string id;
  std::string initial_node;
  double cost = 0.0;
  std::vector<double> demand;
};

struct FixtureNode {
  std::string id;
  std::vector<double> capacity;
};

struct FixtureScenario {
  std::string name;
  std::size_t tasks = 0;  // first N tasks
  std::size_t nodes = 0;  // first N nodes are enabled
  double time_budget_s = 0.0;
};

// Static benchmark instance: a task table, a node table and a list of
// scenarios that enable growing prefixes of both.
struct BalancerFixture {
  std::vector<std::string> resources;
  std::vector<FixtureTask> tasks;
  std::vector<FixtureNode> nodes;
  std::vector<FixtureScenario> scenarios;

  // Reads balancer_tasks.csv, balancer_nodes.csv and balancer_tests.csv.
  static BalancerFixture Load(const std::string& dir);

  const FixtureScenario& scenario(const std::string& name) const;

  // All nodes stay in the state; disabled ones get zero capacity and are
  // not balancing targets, so tasks starting there must move.
  model::SystemState state_for(const FixtureScenario& s) const;
  std::shared_ptr<const Problem> problem_for(const FixtureScenario& s) const;
};

// One CSV row per (scenario, strategy, seed).
void WriteBenchHeader(std::ostream& out);
void WriteBenchRow(std::ostream& out, const std::string& scenario, StrategyKind k,
                   std::uint64_t seed, const BalancerResult& r);

}  // namespace cellsim::metaheuristics

#endif  // CELLSIM_METAHEURISTICS_FIXTURE_H_
