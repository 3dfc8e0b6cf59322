#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cellsim/common/errors.h"
#include "cellsim/metaheuristics/cache.h"
#include "cellsim/metaheuristics/fixture.h"
#include "cellsim/metaheuristics/problem.h"
#include "cellsim/metaheuristics/strategies.h"
#include "support/scenarios.h"

namespace cellsim::metaheuristics {
namespace {

const BalancerFixture& Fixture() {
  static const BalancerFixture fx = BalancerFixture::Load(testing::FixtureDir());
  return fx;
}

StrategyConfig Cfg(std::uint64_t seed, std::uint64_t budget = 5000) {
  StrategyConfig c;
  c.seed = seed;
  c.candidate_budget = budget;
  return c;
}

// Recomputes stability and STC for a genome straight from the problem tables.
std::pair<bool, double> Oracle(const Problem& p, const Genome& g) {
  std::vector<double> load(p.node_count() * p.dims(), 0.0);
  double stc = 0;
  for (std::size_t t = 0; t < p.task_count(); ++t) {
    for (std::size_t d = 0; d < p.dims(); ++d) load[g[t] * p.dims() + d] += p.demand(t, d);
    if (static_cast<std::int32_t>(g[t]) != p.origin(t)) stc += p.cost(t);
  }
  bool stable = true;
  for (std::size_t n = 0; n < p.node_count(); ++n) {
    for (std::size_t d = 0; d < p.dims(); ++d) stable = stable && load[n * p.dims() + d] <= p.capacity(n, d);
  }
  return {stable, stc};
}

TEST(Fixture, ScenarioShapes) {
  const auto& fx = Fixture();
  EXPECT_EQ(fx.resources.size(), 4u);
  for (auto [name, tasks, nodes] : {std::tuple{"I", 20u, 4u}, {"II", 30u, 6u}, {"III", 40u, 8u}}) {
    auto p = fx.problem_for(fx.scenario(name));
    EXPECT_EQ(p->task_count(), tasks) << name;
    EXPECT_EQ(p->node_count(), nodes) << name;
    EXPECT_EQ(p->dims(), 4u);
  }
  EXPECT_THROW(fx.scenario("XX"), LookupError);
}

TEST(Fixture, InitialAssignmentIsUnstable) {
  const auto& fx = Fixture();
  auto p = fx.problem_for(fx.scenario("I"));
  // Tasks starting on nodes outside the scenario have no origin among the targets.
  std::size_t foreign = 0;
  for (std::size_t t = 0; t < p->task_count(); ++t) foreign += p->origin(t) == Problem::kNoOrigin;
  EXPECT_GT(foreign, 0u);
  EXPECT_FALSE(p->origin_genome().has_value());
}

TEST(Problem, NeighbourhoodSize) {
  auto p = Fixture().problem_for(Fixture().scenario("I"));
  Genome g(p->task_count(), 0);
  const auto ns = neighbors(g, *p);
  EXPECT_EQ(ns.size(), p->task_count() * (p->node_count() - 1));
  std::set<Genome> unique(ns.begin(), ns.end());
  EXPECT_EQ(unique.size(), ns.size());
  for (const auto& n : ns) {
    std::size_t diff = 0;
    for (std::size_t i = 0; i < g.size(); ++i) diff += n[i] != g[i];
    EXPECT_EQ(diff, 1u);
  }
}

TEST(Problem, CandidateMatchesOracle) {
  auto p = Fixture().problem_for(Fixture().scenario("II"));
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    Genome g(p->task_count());
    for (auto& x : g) x = static_cast<std::uint16_t>(rng.below(p->node_count()));
    CandidateSolution s(p, g);
    const auto [stable, stc] = Oracle(*p, g);
    EXPECT_EQ(s.stable(), stable);
    EXPECT_DOUBLE_EQ(s.stc(), stc);
  }
}

TEST(Problem, BetterOrdersByCostThenMoves) {
  auto p = Fixture().problem_for(Fixture().scenario("I"));
  Rng rng(1);
  const Genome a = random_stable_solution(*p, rng, 10000);
  CandidateSolution sa(p, a);
  ASSERT_TRUE(sa.stable());
  EXPECT_FALSE(Better(sa, sa));
}

class EveryStrategy : public ::testing::TestWithParam<StrategyKind> {};

TEST_P(EveryStrategy, StableAndConsistent) {
  auto p = Fixture().problem_for(Fixture().scenario("I"));
  const auto r = run_strategy(GetParam(), p, Cfg(3));
  ASSERT_TRUE(r.stable);
  ASSERT_TRUE(r.best);
  const auto [stable, stc] = Oracle(*p, r.best->genome());
  EXPECT_TRUE(stable);
  EXPECT_DOUBLE_EQ(r.best->stc(), stc);
  EXPECT_GT(r.stats.candidates_examined, 0u);
}

TEST_P(EveryStrategy, DeterministicPerSeed) {
  auto p = Fixture().problem_for(Fixture().scenario("II"));
  const auto a = run_strategy(GetParam(), p, Cfg(9));
  const auto b = run_strategy(GetParam(), p, Cfg(9));
  ASSERT_TRUE(a.best && b.best);
  EXPECT_EQ(a.best->genome(), b.best->genome());
}

INSTANTIATE_TEST_SUITE_P(All, EveryStrategy,
                         ::testing::Values(StrategyKind::kGreedy, StrategyKind::kTabu,
                                           StrategyKind::kAnnealing, StrategyKind::kGenetic,
                                           StrategyKind::kSeededGenetic),
                         [](const auto& info) { return StrategyName(info.param); });

TEST(Strategies, NamesRoundTrip) {
  for (auto k : {StrategyKind::kGreedy, StrategyKind::kTabu, StrategyKind::kAnnealing,
                 StrategyKind::kGenetic, StrategyKind::kSeededGenetic, StrategyKind::kFullScan}) {
    EXPECT_EQ(ParseStrategy(StrategyName(k)), k);
  }
  EXPECT_THROW(ParseStrategy("hill-climb"), ConfigError);
}

TEST(Strategies, ConfigValidation) {
  StrategyConfig c;
  EXPECT_THROW(c.validate(), ConfigError);  // no seed
  c.seed = 1;
  c.candidate_budget.reset();
  EXPECT_THROW(c.validate(), ConfigError);  // no budget
  c.max_runs = 2;
  EXPECT_NO_THROW(c.validate());
}

TEST(FullScan, RefusesHugeTrees) {
  auto p = Fixture().problem_for(Fixture().scenario("III"));
  EXPECT_THROW(full_scan(p, Cfg(1)), SearchSpaceTooLarge);
}

TEST(FullScan, NoWorseThanHeuristics) {
  auto p = Fixture().problem_for(Fixture().scenario("I"));
  auto cfg = Cfg(1);
  cfg.full_scan_leaf_cap = 1e60;
  const auto best = full_scan(p, cfg);
  ASSERT_TRUE(best.best);
  for (auto k : {StrategyKind::kTabu, StrategyKind::kSeededGenetic}) {
    const auto r = run_strategy(k, p, Cfg(2));
    ASSERT_TRUE(r.best);
    EXPECT_LE(best.best->stc(), r.best->stc());
  }
}

TEST(FullScan, InfeasibleInstanceReportsUnstable) {
  model::SystemState s(model::ResourceTypeCatalog({"cpu"}), {{"A", {1}, {}}, {"B", {1}, {}}},
                       {{"t1", {0.8}, {0}, 1}, {"t2", {0.8}, {0}, 1}, {"t3", {0.8}, {0}, 1}},
                       model::Assignment(std::map<model::TaskId, model::NodeId>{
                           {"t1", "A"}, {"t2", "A"}, {"t3", "B"}}));
  const auto r = full_scan(Problem::FromState(s), Cfg(1));
  EXPECT_FALSE(r.stable);
  EXPECT_FALSE(r.best);
}

TEST(Cache, LruEviction) {
  SolutionCache cache(2);
  auto p = Fixture().problem_for(Fixture().scenario("I"));
  int built = 0;
  auto make = [&](std::uint16_t v) {
    Genome g(p->task_count(), v);
    return cache.lookup_or_insert(g, [&] {
      ++built;
      return std::make_shared<const CandidateSolution>(p, g);
    });
  };
  make(0);
  make(1);
  make(0);  // hit, refreshes 0
  make(2);  // evicts 1
  make(1);  // miss again
  EXPECT_EQ(built, 4);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.size(), 2u);
}

TEST(Bench, RowLayout) {
  auto p = Fixture().problem_for(Fixture().scenario("I"));
  const auto r = run_strategy(StrategyKind::kGreedy, p, Cfg(4));
  std::ostringstream out;
  WriteBenchHeader(out);
  WriteBenchRow(out, "I", StrategyKind::kGreedy, 4, r);
  std::string header, row;
  std::istringstream in(out.str());
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.rfind("I,greedy,4,true,", 0), 0u) << row;
}

}  // namespace
}  // namespace cellsim::metaheuristics
