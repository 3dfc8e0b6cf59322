#include "cellsim/metaheuristics/fixture.h"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "cellsim/common/errors.h"
#include "cellsim/workload/gcd_parser.h"

namespace cellsim::metaheuristics {

namespace {

std::vector<std::vector<std::string>> ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixture file " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.emplace_back();
    workload::SplitCsv(line, rows.back());
  }
  if (rows.empty()) throw ConfigError("empty fixture file " + path);
  return rows;
}

double Number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' in " + where);
  }
}

}  // namespace

BalancerFixture BalancerFixture::Load(const std::string& dir) {
  BalancerFixture f;
  auto nodes = ReadCsv(dir + "/balancer_nodes.csv");
  if (nodes[0].size() < 2) throw ConfigError("node fixture needs resource columns");
  f.resources.assign(nodes[0].begin() + 1, nodes[0].end());
  const std::size_t D = f.resources.size();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].size() != D + 1) throw ConfigError("node fixture row has wrong width");
    FixtureNode n{nodes[i][0], {}};
    for (std::size_t d = 0; d < D; ++d) n.capacity.push_back(Number(nodes[i][d + 1], "nodes"));
    f.nodes.push_back(std::move(n));
  }
  auto tasks = ReadCsv(dir + "/balancer_tasks.csv");
  for (std::size_t i = 1; i < tasks.size(); ++i) {
    if (tasks[i].size() != D + 3) throw ConfigError("task fixture row has wrong width");
    FixtureTask t{tasks[i][0], tasks[i][1], Number(tasks[i][2], "tasks"), {}};
    for (std::size_t d = 0; d < D; ++d) t.demand.push_back(Number(tasks[i][d + 3], "tasks"));
    f.tasks.push_back(std::move(t));
  }
  auto tests = ReadCsv(dir + "/balancer_tests.csv");
  for (std::size_t i = 1; i < tests.size(); ++i) {
    if (tests[i].size() != 4) throw ConfigError("scenario fixture row has wrong width");
    FixtureScenario s{tests[i][0], static_cast<std::size_t>(Number(tests[i][1], "tests")),
                      static_cast<std::size_t>(Number(tests[i][2], "tests")),
                      Number(tests[i][3], "tests")};
    if (s.tasks > f.tasks.size() || s.nodes > f.nodes.size()) {
      throw ConfigError("scenario " + s.name + " exceeds the fixture tables");
    }
    f.scenarios.push_back(s);
  }
  return f;
}

const FixtureScenario& BalancerFixture::scenario(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.name == name) return s;
  }
  throw LookupError("unknown fixture scenario " + name);
}

model::SystemState BalancerFixture::state_for(const FixtureScenario& s) const {
  std::vector<model::NodeSpec> ns;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    model::NodeSpec n;
    n.id = nodes[i].id;
    n.total = i < s.nodes ? model::ResourceVector(nodes[i].capacity)
                          : model::ResourceVector(resources.size(), 0.0);
    ns.push_back(std::move(n));
  }
  std::vector<model::TaskSpec> ts;
  model::Assignment a;
  for (std::size_t i = 0; i < s.tasks; ++i) {
    model::TaskSpec t;
    t.id = tasks[i].id;
    t.required = model::ResourceVector(tasks[i].demand);
    t.used = t.required;
    t.migration_cost_mb = tasks[i].cost;
    ts.push_back(t);
    a.set(t.id, tasks[i].initial_node);
  }
  return model::SystemState(model::ResourceTypeCatalog(resources), std::move(ns), std::move(ts),
                            std::move(a));
}

std::shared_ptr<const Problem> BalancerFixture::problem_for(const FixtureScenario& s) const {
  std::vector<model::NodeId> targets;
  for (std::size_t i = 0; i < s.nodes; ++i) targets.push_back(nodes[i].id);
  return Problem::FromState(state_for(s), targets);
}

void WriteBenchHeader(std::ostream& out) {
  out << "scenario,strategy,seed,stable,best_stc,migrations,runs,candidates,"
         "unique_candidates,cache_hits,elapsed_s\n";
}

void WriteBenchRow(std::ostream& out, const std::string& scenario, StrategyKind k,
                   std::uint64_t seed, const BalancerResult& r) {
  std::ostringstream row;
  row << scenario << ',' << StrategyName(k) << ',' << seed << ',' << (r.stable ? "true" : "false")
      << ',';
  if (r.best) {
    row << r.best->stc() << ',' << r.best->moved();
  } else {
    row << ",";
  }
  row << ',' << r.stats.runs << ',' << r.stats.candidates_examined << ','
      << r.stats.unique_candidates << ',' << r.stats.cache_hits << ',' << std::fixed
      << std::setprecision(3) << r.stats.elapsed_s << '\n';
  out << row.str();
}

}  // namespace cellsim::metaheuristics
