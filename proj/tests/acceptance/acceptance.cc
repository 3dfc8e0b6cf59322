// Acceptance checks: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `acceptance 3 9`.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cellsim/common/errors.h"
#include "cellsim/common/rng.h"
#include "cellsim/harness/simulation.h"
#include "cellsim/lmdt/lmdt.h"
#include "cellsim/masb/engine.h"
#include "cellsim/masb/scoring.h"
#include "cellsim/metaheuristics/fixture.h"
#include "cellsim/metaheuristics/problem.h"
#include "cellsim/metaheuristics/strategies.h"
#include "cellsim/model/system_state.h"
#include "cellsim/workload/constraints.h"
#include "support/scenarios.h"

namespace {

using namespace cellsim;
namespace mh = metaheuristics;
using model::ResourceVector;
using testing::NodeIndex;
using testing::TaskIndex;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) {
      ++failures_;
      if (first_failure_.empty()) first_failure_ = what;
    }
  }
  Outcome outcome(const std::string& summary) const {
    Outcome o;
    o.pass = failures_ == 0;
    o.detail = summary + "; " + std::to_string(checks_ - failures_) + "/" + std::to_string(checks_) + " checks";
    if (!o.pass) o.detail += "; first failure: " + first_failure_;
    return o;
  }

 private:
  int checks_ = 0;
  int failures_ = 0;
  std::string first_failure_;
};

std::string Num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

model::TaskSpec Task(const std::string& id, ResourceVector req, double cost) {
  model::TaskSpec t;
  t.id = id;
  t.required = req;
  t.used = ResourceVector(req.size());
  t.migration_cost_mb = cost;
  return t;
}

model::NodeSpec Node(const std::string& id, ResourceVector total) {
  model::NodeSpec n;
  n.id = id;
  n.total = std::move(total);
  return n;
}

// ---------------------------------------------------------------- 1

Outcome WorkedExamples() {
  Checker c;
  {
    model::SystemState s(model::ResourceTypeCatalog({"cpu"}), {Node("n1", {2.0})},
                         {Task("t1", {0.5}, 1), Task("t2", {0.2}, 1)},
                         model::Assignment({{"t1", "n1"}, {"t2", "n1"}}));
    const auto f = model::available_resources(s, "n1");
    c.expect(f[0] == 1.3, "available CPU " + Num(f[0], 17) + " != 1.3");
  }
  {
    // Two nodes swap Task 2 (105 MB) and Task 5 (240 MB).
    std::vector<model::TaskSpec> tasks = {Task("1", {5, 3}, 60), Task("2", {4, 6}, 105),
                                          Task("3", {2, 4}, 80), Task("4", {3, 2}, 70),
                                          Task("5", {2, 1}, 240)};
    model::Assignment before({{"1", "A"}, {"2", "A"}, {"3", "A"}, {"4", "B"}, {"5", "B"}});
    model::Assignment after({{"1", "A"}, {"2", "B"}, {"3", "A"}, {"4", "B"}, {"5", "A"}});
    c.expect(model::transformation_cost(before, after, tasks) == 345.0, "swap STC != 345");
    c.expect(model::migration_cost(tasks[1], before, after) == 105.0, "Task 2 cost != 105");
    c.expect(model::migration_cost(tasks[4], before, after) == 240.0, "Task 5 cost != 240");
    for (int i : {0, 2, 3}) {
      c.expect(model::migration_cost(tasks[i], before, after) == 0.0, "unmoved task cost != 0");
    }
    c.expect(model::transformation_cost(before, before, tasks) == 0.0, "identity STC != 0");
  }
  return c.outcome("f_CPU=1.3, swap STC=345, unmoved=0");
}

// ---------------------------------------------------------------- 2

Outcome ConstraintGolden() {
  using model::ConstraintOp;
  struct Row {
    ConstraintOp op;
    std::string value;
    std::map<std::string, std::string> attrs;
    bool expected;
  };
  const std::string a1 = "attribute 1";
  const std::map<std::string, std::string> none;
  const std::vector<Row> rows = {
      {ConstraintOp::kEqual, "value A", {{a1, "value A"}}, true},
      {ConstraintOp::kEqual, "value A", {{a1, "value B"}}, false},
      {ConstraintOp::kEqual, "value A", {{a1, ""}}, false},
      {ConstraintOp::kEqual, "value A", none, false},
      {ConstraintOp::kEqual, "value A", {{a1, ""}}, false},
      {ConstraintOp::kEqual, "", none, true},
      {ConstraintOp::kEqual, "", {{a1, ""}}, true},
      {ConstraintOp::kEqual, "", {{"attribute 2", "value A"}}, true},
      {ConstraintOp::kNotEqual, "value A", {{a1, "value A"}}, false},
      {ConstraintOp::kNotEqual, "value A", {{a1, "value B"}}, true},
      {ConstraintOp::kNotEqual, "value A", {{a1, ""}}, true},
      {ConstraintOp::kNotEqual, "value A", none, true},
      {ConstraintOp::kNotEqual, "value A", {{a1, ""}}, true},
      {ConstraintOp::kNotEqual, "", none, false},
      {ConstraintOp::kNotEqual, "", {{a1, ""}}, false},
      {ConstraintOp::kLessThan, "10", {{a1, "10"}}, false},
      {ConstraintOp::kLessThan, "10", {{a1, "9"}}, true},
      {ConstraintOp::kLessThan, "10", {{a1, "99"}}, false},
      {ConstraintOp::kLessThan, "10", {{a1, "11"}}, false},
      {ConstraintOp::kLessThan, "10", none, true},
      {ConstraintOp::kGreaterThan, "10", {{a1, "10"}}, false},
      {ConstraintOp::kGreaterThan, "10", {{a1, "9"}}, false},
      {ConstraintOp::kGreaterThan, "10", {{a1, "99"}}, true},
      {ConstraintOp::kGreaterThan, "10", {{a1, "11"}}, true},
      {ConstraintOp::kGreaterThan, "10", none, false},
  };
  Checker c;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    model::AttributeMap attrs(r.attrs.begin(), r.attrs.end());
    const bool got = workload::check_constraint({r.op, a1, r.value}, attrs);
    c.expect(got == r.expected, "row " + std::to_string(i + 1));
  }
  return c.outcome(std::to_string(rows.size()) + " truth-table rows");
}

// ---------------------------------------------------------------- 3

struct Instance {
  model::SystemState state;
  std::vector<model::NodeId> nodes;
};

Instance RandomInstance(Rng& rng) {
  const std::size_t nn = 2 + rng.below(3);   // 2..4
  const std::size_t nt = 4 + rng.below(7);   // 4..10
  const std::size_t dim = 2 + rng.below(3);  // 2..4
  std::vector<std::string> names;
  for (std::size_t d = 0; d < dim; ++d) names.push_back("r" + std::to_string(d));
  Instance in;
  std::vector<model::NodeSpec> nodes;
  for (std::size_t i = 0; i < nn; ++i) {
    ResourceVector cap(dim);
    for (std::size_t d = 0; d < dim; ++d) cap[d] = static_cast<double>(6 + rng.below(10));
    nodes.push_back(Node("N" + std::to_string(i), cap));
    in.nodes.push_back(nodes.back().id);
  }
  std::vector<model::TaskSpec> tasks;
  model::Assignment a;
  for (std::size_t t = 0; t < nt; ++t) {
    ResourceVector req(dim);
    for (std::size_t d = 0; d < dim; ++d) req[d] = static_cast<double>(1 + rng.below(5));
    tasks.push_back(Task("T" + std::to_string(t), req, static_cast<double>(1 + rng.below(30))));
    a.set(tasks.back().id, in.nodes[rng.below(nn)]);
  }
  in.state = model::SystemState(model::ResourceTypeCatalog(names), nodes, tasks, a);
  return in;
}

// Plain enumeration of every assignment; returns the minimum STC among
// stable ones, or -1 when none is stable.
double ExhaustiveOptimum(const Instance& in) {
  const auto& tasks = in.state.tasks();
  const std::size_t nn = in.nodes.size(), nt = tasks.size(), dim = in.state.catalog().dimension();
  std::vector<std::size_t> origin(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& host = in.state.assignment().at(tasks[t].id);
    origin[t] = static_cast<std::size_t>(std::find(in.nodes.begin(), in.nodes.end(), host) - in.nodes.begin());
  }
  std::vector<std::size_t> g(nt, 0);
  double best = -1;
  while (true) {
    std::vector<double> load(nn * dim, 0.0);
    double stc = 0;
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t d = 0; d < dim; ++d) load[g[t] * dim + d] += tasks[t].required[d];
      if (g[t] != origin[t]) stc += tasks[t].migration_cost_mb;
    }
    bool stable = true;
    for (std::size_t n = 0; n < nn && stable; ++n) {
      const auto& cap = in.state.node(in.nodes[n]).total;
      for (std::size_t d = 0; d < dim; ++d) stable = stable && load[n * dim + d] <= cap[d];
    }
    if (stable && (best < 0 || stc < best)) best = stc;
    std::size_t i = 0;
    while (i < nt && ++g[i] == nn) g[i++] = 0;
    if (i == nt) break;
  }
  return best;
}

Outcome FullScanOracle() {
  Checker c;
  Rng rng(20240917);
  int stable_instances = 0;
  for (int k = 0; k < 20; ++k) {
    const Instance in = RandomInstance(rng);
    const double want = ExhaustiveOptimum(in);
    mh::StrategyConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(k);
    cfg.full_scan_leaf_cap = 1e12;
    const auto r = mh::full_scan(mh::Problem::FromState(in.state, in.nodes), cfg);
    if (want < 0) {
      c.expect(!r.stable, "instance " + std::to_string(k) + ": full scan found a stable assignment the oracle did not");
    } else {
      ++stable_instances;
      c.expect(r.stable && r.best && r.best->stc() == want,
               "instance " + std::to_string(k) + ": full scan " + (r.best ? Num(r.best->stc()) : "none") +
                   " vs oracle " + Num(want));
    }
  }
  return c.outcome("20 instances, " + std::to_string(stable_instances) + " with a stable optimum");
}

// ---------------------------------------------------------------- 4

double FixtureOptimum(const mh::BalancerFixture& fx, const std::string& scenario) {
  mh::StrategyConfig cfg;
  cfg.seed = 1;
  cfg.full_scan_leaf_cap = 1e60;
  const auto r = mh::full_scan(fx.problem_for(fx.scenario(scenario)), cfg);
  return r.best ? r.best->stc() : -1;
}

Outcome StrategySoundness() {
  Checker c;
  const auto fx = mh::BalancerFixture::Load(testing::FixtureDir());
  const double opt = FixtureOptimum(fx, "I");
  c.expect(opt > 0, "full scan found no optimum on Test I");
  auto problem = fx.problem_for(fx.scenario("I"));
  std::map<std::string, double> worst;
  for (auto k : {mh::StrategyKind::kGreedy, mh::StrategyKind::kTabu, mh::StrategyKind::kAnnealing,
                 mh::StrategyKind::kGenetic, mh::StrategyKind::kSeededGenetic}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      mh::StrategyConfig cfg;
      cfg.seed = seed;
      cfg.candidate_budget = 20000;
      const auto r = mh::run_strategy(k, problem, cfg);
      const std::string tag = mh::StrategyName(k) + " seed " + std::to_string(seed);
      c.expect(r.stable && r.best && r.best->stable(), tag + " not stable");
      if (!r.best) continue;
      c.expect(r.best->stc() >= opt, tag + " beat the optimum");
      worst[mh::StrategyName(k)] = std::max(worst[mh::StrategyName(k)], r.best->stc());
    }
  }
  std::string summary = "Test I optimum " + Num(opt) + "; worst STC";
  for (const auto& [k, v] : worst) summary += " " + k + "=" + Num(v);
  return c.outcome(summary);
}

// ---------------------------------------------------------------- 5

Outcome SeedingBenefit() {
  Checker c;
  const auto fx = mh::BalancerFixture::Load(testing::FixtureDir());
  std::string summary;
  constexpr int kSeeds = 20;
  for (const std::string name : {"I", "II", "III"}) {
    auto problem = fx.problem_for(fx.scenario(name));
    double ga = 0, sga = 0;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      mh::StrategyConfig cfg;
      cfg.seed = seed;
      cfg.candidate_budget = 50000;
      const auto a = mh::run_strategy(mh::StrategyKind::kGenetic, problem, cfg);
      const auto b = mh::run_strategy(mh::StrategyKind::kSeededGenetic, problem, cfg);
      c.expect(a.best && b.best, "Test " + name + " seed " + std::to_string(seed) + " found nothing stable");
      if (!a.best || !b.best) continue;
      ga += a.best->stc();
      sga += b.best->stc();
    }
    ga /= kSeeds;
    sga /= kSeeds;
    c.expect(sga <= ga, "Test " + name + ": mean SGA " + Num(sga) + " > mean GA " + Num(ga));
    summary += (summary.empty() ? "" : ", ") + name + ": SGA " + Num(sga) + " vs GA " + Num(ga);
  }
  return c.outcome("mean STC over 20 seeds, 50k candidates: " + summary);
}

// ---------------------------------------------------------------- 6

Outcome LmdtProperties() {
  Checker c;
  lmdt::ProfileCatalog cat;
  for (const auto& k : cat.kinds()) {
    const auto& p = cat.profile_for(k);
    c.expect(lmdt::lmdt_estimate(p, 0.0) == p.cmdt_mb + p.mf_mb, k + " at AM=0");
    double prev = lmdt::lmdt_estimate(p, 0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double v = lmdt::lmdt_estimate(p, static_cast<double>(i));
      if (p.af > 0) c.expect(v > prev, k + " not strictly increasing at AM=" + std::to_string(i));
      prev = v;
    }
  }
  const auto apache = cat.profile_for("apache");
  const auto spec = cat.profile_for("specjvm2008");
  const auto pg = cat.profile_for("postgresql");
  c.expect(apache.cmdt_mb == 175 && apache.af == 0.00682 && apache.mf_mb == 9.6, "apache constants");
  c.expect(spec.cmdt_mb == 115 && spec.af == 0.03305 && spec.mf_mb == 9.6, "specjvm2008 constants");
  c.expect(pg.cmdt_mb == 145 && pg.af == 0.01072 && pg.mf_mb == 9.6, "postgresql constants");
  c.expect(std::abs(lmdt::lmdt_estimate(apache, 100) - (175 + 9.6 * std::exp(0.682))) < 1e-9, "apache AM=100");
  return c.outcome(std::to_string(cat.kinds().size()) + " profiles, AM sampled 0..1000 MB");
}

// ---------------------------------------------------------------- 7

Outcome ScoringSurface() {
  Checker c;
  const ResourceVector total{1.0, 1.0};
  struct Best {
    double v = -1;
    int i = 0, j = 0;
  } sias, sras;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const ResourceVector u{i / 100.0, j / 100.0};
      const double a = masb::sias(total, u), b = masb::sras(total, u);
      if (a > sias.v) sias = {a, i, j};
      if (b > sras.v) sras = {b, i, j};
      const auto cls = masb::classify_allocation(total, u, ResourceVector{0, 0}, true);
      if (cls == masb::AllocationClass::kSta || cls == masb::AllocationClass::kOverloaded) {
        c.expect(a == 0 && b == 0, "non-zero score in STA/Overloaded at " + std::to_string(i) + "," + std::to_string(j));
      }
      const ResourceVector sw{j / 100.0, i / 100.0};
      c.expect(a == masb::sias(total, sw) && b == masb::sras(total, sw), "asymmetry");
    }
  }
  const auto cls_of = [&](const Best& b) {
    return masb::classify_allocation(total, ResourceVector{b.i / 100.0, b.j / 100.0}, ResourceVector{0, 0}, true);
  };
  c.expect(cls_of(sias) == masb::AllocationClass::kPa, "SIAS argmax not in PA");
  c.expect(cls_of(sras) == masb::AllocationClass::kTa, "SRAS argmax not in TA");
  const double at_sias_bias = masb::sias(total, ResourceVector{0.7, 0.7});
  const double at_sras_bias = masb::sras(total, ResourceVector{0.4, 0.4});
  c.expect(std::abs(at_sias_bias - 0.2) <= 1e-12, "SIAS at bias point " + Num(at_sias_bias, 17));
  c.expect(std::abs(at_sras_bias - 0.2) <= 1e-12, "SRAS at bias point " + Num(at_sras_bias, 17));
  return c.outcome("SIAS argmax (" + Num(sias.i / 100.0) + "," + Num(sias.j / 100.0) + ") " +
                   masb::ToString(cls_of(sias)) + ", SRAS argmax (" + Num(sras.i / 100.0) + "," +
                   Num(sras.j / 100.0) + ") " + masb::ToString(cls_of(sras)));
}

// ---------------------------------------------------------------- 8

bool OracleConstraintsHold(const model::TaskSpec& t, const model::NodeSpec& n) {
  for (const auto& k : t.constraints) {
    auto it = n.attributes.find(k.attribute);
    const bool eq = it != n.attributes.end() && it->second == k.value;
    if (k.op == model::ConstraintOp::kEqual && !eq) return false;
    if (k.op == model::ConstraintOp::kNotEqual && eq) return false;
  }
  return true;
}

// Random workload churn between ticks: usage drift and spikes, task
// arrivals and departures, occasional node loss.
void Perturb(workload::Cell& cell, Rng& rng, int& serial) {
  std::vector<TaskIndex> live;
  for (TaskIndex t = 0; t < cell.task_slots(); ++t) {
    if (cell.task(t).alive) live.push_back(t);
  }
  for (TaskIndex t : live) {
    const double u = rng.uniform();
    const auto& s = cell.task(t).spec;
    if (u < 0.05) {
      cell.remove_task(t);
    } else if (u < 0.25 && cell.task(t).node != workload::kNoIndex) {
      const double f = rng.uniform(0.5, 1.8);
      cell.set_task_used(t, ResourceVector{s.required[0] * f, s.required[1] * f * rng.uniform(0.8, 1.2)},
                         s.migration_cost_mb);
    }
  }
  const int arrivals = static_cast<int>(rng.below(6));
  for (int i = 0; i < arrivals; ++i) {
    model::TaskSpec t;
    t.id = "new" + std::to_string(serial++);
    t.required = {rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1)};
    t.used = {0, 0};
    t.unstarted = true;
    t.production = rng.uniform() < 0.3;
    t.priority = t.production ? 9 : 0;
    t.migration_cost_mb = 10 + rng.below(100);
    if (rng.uniform() < 0.2) t.constraints.push_back({model::ConstraintOp::kEqual, "arch", "arm"});
    if (rng.uniform() < 0.05) t.constraints.push_back({model::ConstraintOp::kNotEqual, "arch", "x86"});
    cell.add_task(t);
  }
  if (rng.uniform() < 0.1) {
    std::vector<NodeIndex> online;
    for (NodeIndex n = 0; n < cell.node_slots(); ++n) {
      if (cell.node(n).online) online.push_back(n);
    }
    if (online.size() > 5) cell.remove_node(online[rng.below(online.size())]);
  }
}

Outcome ProtocolSafety() {
  Checker c;
  std::uint64_t nonforced = 0, forced = 0, initial = 0, violations = 0;
  for (int s = 0; s < 1000; ++s) {
    Rng rng(DeriveSeed(0x5afe, static_cast<std::uint64_t>(s)));
    testing::LoadedCellSpec spec;
    spec.nodes = 20 + static_cast<int>(rng.below(81));
    spec.load = rng.uniform(0.5, 1.0);
    spec.burst_nodes = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.nodes / 4 + 1)));
    spec.burst_level = rng.uniform(1.0, 1.6);
    spec.production_fraction = rng.uniform(0.0, 0.6);
    spec.constraint_rate = rng.uniform(0.0, 0.3);
    spec.unstarted_fraction = rng.uniform(0.0, 0.2);
    spec.seed = rng();
    workload::Cell cell = testing::MakeLoadedCell(spec);
    masb::EngineConfig cfg;
    cfg.seed = rng();
    cfg.broker_count = 1 + static_cast<int>(rng.below(3));
    cfg.rounds_per_tick = 2 + static_cast<int>(rng.below(6));
    cfg.recommendation_count = 3 + rng.below(15);
    masb::Engine engine(cell, cfg);
    const std::string tag = "scenario " + std::to_string(s);
    engine.set_completion_observer([&](const masb::Completion& comp, const workload::Cell& cl, SimTime now) {
      const auto& node = cl.node(comp.target);
      const auto& task = cl.task(comp.task).spec;
      std::string bad;
      if (now - comp.recommended_at > cfg.recommendation_ttl) bad = "expired recommendation";
      if (!comp.forced) {
        ++nonforced;
        if (comp.source == workload::kNoIndex) ++initial;
        if (testing::OracleOverloaded(cl, comp.target)) bad = "target overloaded";
      } else {
        ++forced;
        if (!OracleConstraintsHold(task, node.spec)) bad = "constraint violated";
        for (std::size_t i = 0; i < task.required.size(); ++i) {
          if (task.required[i] > node.spec.total[i] || task.used[i] > node.spec.total[i]) bad = "exceeds capacity";
        }
      }
      if (!bad.empty()) ++violations;
      c.expect(bad.empty(), tag + ": " + bad + " on " + (comp.forced ? "forced" : "non-forced") + " completion of " + task.id);
    });
    int serial = 0;
    for (int tick = 0; tick < 5; ++tick) {
      engine.submit_pending();
      engine.run_tick(tick * Minutes(1));
      std::string why;
      if (!testing::OracleConservation(cell, &why)) {
        c.expect(false, tag + ": conservation: " + why);
        break;
      }
      Perturb(cell, rng, serial);
    }
    c.expect(engine.safety().clean(), tag + ": engine safety counters not clean");
  }
  return c.outcome("1000 scenarios, " + std::to_string(nonforced) + " non-forced (" + std::to_string(initial) +
                   " initial) and " + std::to_string(forced) + " forced completions, " +
                   std::to_string(violations) + " violations");
}

// ---------------------------------------------------------------- 9

Outcome ProtocolLiveness() {
  Checker c;
  std::string per_seed;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::LoadedCellSpec spec;
    spec.nodes = 200;
    spec.load = 0.85;
    spec.burst_nodes = 10;
    spec.burst_level = 1.25;
    spec.seed = seed;
    workload::Cell cell = testing::MakeLoadedCell(spec);
    const std::size_t before = testing::OracleOverloadedCount(cell);
    masb::EngineConfig cfg;
    cfg.seed = seed;
    masb::Engine engine(cell, cfg);
    int converged_at = -1;
    for (int minute = 0; minute < 30; ++minute) {
      engine.run_tick(minute * Minutes(1));
      const double ratio = static_cast<double>(testing::OracleOverloadedCount(cell)) /
                           static_cast<double>(testing::OracleOnlineCount(cell));
      if (converged_at < 0 && ratio <= 0.005) converged_at = minute + 1;
    }
    const double final_ratio = static_cast<double>(testing::OracleOverloadedCount(cell)) /
                               static_cast<double>(testing::OracleOnlineCount(cell));
    worst = std::max(worst, final_ratio);
    c.expect(before >= 10, "seed " + std::to_string(seed) + ": burst did not overload 10 nodes");
    c.expect(final_ratio <= 0.005, "seed " + std::to_string(seed) + ": " + Num(100 * final_ratio) + "% overloaded after 30 min");
    per_seed += (per_seed.empty() ? "" : ",") + std::to_string(converged_at);
  }
  return c.outcome("minutes to converge per seed [" + per_seed + "], worst final " + Num(100 * worst) + "%");
}

// ---------------------------------------------------------------- 10

workload::SynthConfig PairingWorkload() {
  workload::SynthConfig s;
  s.seed = 4242;
  s.node_count = 150;
  s.initial_tasks = 2600;
  s.task_arrival_rate = 60;
  s.duration_minutes = 120;
  s.batch.usage_factor = {0.6, 1.0};
  s.service.usage_factor = {0.6, 1.0};
  s.bursts = {{30, 0.25, 1.5}, {70, 0.25, 1.5}};
  return s;
}

harness::RunConfig SynthRun(const workload::SynthConfig& s, std::uint64_t seed) {
  harness::RunConfig cfg;
  cfg.mode = harness::Mode::kMasb;
  cfg.synth = s;
  cfg.seed = seed;
  return cfg;
}

Outcome ScoringPairing() {
  Checker c;
  using masb::ScorerKind;
  struct Pair {
    ScorerKind initial, realloc;
  };
  const Pair pairs[] = {{ScorerKind::kSias, ScorerKind::kSras},
                        {ScorerKind::kSias, ScorerKind::kSrasGain},
                        {ScorerKind::kSiasGain, ScorerKind::kSras},
                        {ScorerKind::kSiasGain, ScorerKind::kSrasGain}};
  std::map<std::string, double> stc;
  std::string summary;
  for (const auto& p : pairs) {
    auto cfg = SynthRun(PairingWorkload(), 17);
    cfg.masb.initial_scorer = p.initial;
    cfg.masb.realloc_scorer = p.realloc;
    harness::Simulation sim(cfg);
    while (!sim.finished()) sim.step();
    double from_log = 0;
    for (const auto& m : sim.migration_log()) from_log += m.cost_mb;
    c.expect(std::abs(from_log - sim.totals().stc_mb) <= 1e-6 * std::max(1.0, from_log), "STC disagrees with migration log");
    const std::string key = masb::ToString(p.initial) + "/" + masb::ToString(p.realloc);
    stc[key] = sim.totals().stc_mb;
    summary += (summary.empty() ? "" : ", ") + key + "=" + Num(sim.totals().stc_mb / 1024.0) + "GB(" +
               std::to_string(sim.totals().migrations) + ")";
  }
  c.expect(stc["sias-gain/sras"] <= stc["sias-gain/sras-gain"], "STC(SIAS_GAIN,SRAS) > STC(SIAS_GAIN,SRAS_GAIN)");
  return c.outcome(summary);
}

// ---------------------------------------------------------------- 11

std::string TickRows(harness::Simulation& sim, std::int64_t until) {
  std::ostringstream out;
  while (!sim.finished() && sim.tick() < until) harness::WriteTickRow(out, sim.step());
  return out.str();
}

Outcome DeterminismAndSnapshot() {
  Checker c;
  workload::SynthConfig s;
  s.seed = 99;
  s.node_count = 120;
  s.initial_tasks = 2000;
  s.task_arrival_rate = 40;
  s.duration_minutes = 40;
  s.batch.usage_factor = {0.6, 1.0};
  s.bursts = {{10, 0.3, 1.5}};
  const auto cfg = SynthRun(s, 5);
  std::string a, b;
  {
    harness::Simulation sim(cfg);
    a = TickRows(sim, 40);
  }
  {
    harness::Simulation sim(cfg);
    b = TickRows(sim, 40);
  }
  c.expect(!a.empty() && a == b, "two runs with the same seed differ");

  const auto dir = std::filesystem::temp_directory_path() / "cellsim-acceptance-snap";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::string head, tail_resumed, path;
  {
    harness::Simulation sim(cfg);
    head = TickRows(sim, 17);
    path = harness::SaveSnapshot(sim.snapshot(), dir.string(), "acc", sim.tick(), 2);
  }
  {
    harness::Simulation sim(cfg);
    sim.restore(harness::LoadSnapshot(path));
    tail_resumed = TickRows(sim, 40);
  }
  c.expect(head + tail_resumed == a, "resumed run diverges from the uninterrupted run");
  // Identical state digests after save/load.
  {
    harness::Simulation sim(cfg);
    TickRows(sim, 9);
    const auto j = sim.snapshot();
    harness::Simulation other(cfg);
    other.restore(j);
    c.expect(harness::SnapshotStateHash(other.snapshot()) == harness::SnapshotStateHash(j), "state hash changes on reload");
  }
  std::filesystem::remove_all(dir);
  const auto lines = std::count(a.begin(), a.end(), '\n');
  return c.outcome(std::to_string(lines) + " tick rows identical across runs and across a tick-17 snapshot");
}

// ---------------------------------------------------------------- 12

Outcome Performance() {
  Checker c;
  workload::SynthConfig s;
  s.seed = 12;
  s.node_count = 10000;
  s.initial_tasks = 100000;
  // All batch, with arrivals matching departures so the live population
  // holds near 100k at roughly two thirds of cell capacity.
  s.batch_fraction = 1.0;
  s.batch_duration_minutes = {12.0, 20.0};
  s.task_arrival_rate = 6250;
  s.duration_minutes = 60;
  s.batch = {{0.03, 0.1}, {0.03, 0.1}, {0.6, 1.0}};
  s.bursts = {{20, 0.1, 1.6}};
  auto cfg = SynthRun(s, 3);
  cfg.max_ticks = 60;
  const auto t0 = std::chrono::steady_clock::now();
  harness::Simulation sim(cfg);
  std::size_t peak_tasks = 0;
  double worst_steady = 0, used = 0, peak_burst = 0;
  std::uint64_t migrations = 0;
  while (!sim.finished()) {
    const auto r = sim.step();
    peak_tasks = std::max(peak_tasks, sim.cell().live_task_count());
    const double online = static_cast<double>(sim.cell().online_node_count());
    if (r.tick >= 20 && r.tick < 30) peak_burst = std::max(peak_burst, static_cast<double>(r.overloaded) / online);
    if (r.tick >= 30) worst_steady = std::max(worst_steady, static_cast<double>(r.overloaded) / online);
    used = r.cpu_used_ratio;
    migrations += r.migrations_completed;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(sim.tick() >= 60, "fewer than 60 simulated minutes");
  c.expect(wall <= 600, "wall time " + Num(wall) + " s > 600 s");
  c.expect(peak_tasks >= 100000, "peak live tasks " + std::to_string(peak_tasks) + " < 100000");
  c.expect(worst_steady <= 0.005, "steady-state overloaded ratio " + Num(100 * worst_steady) + "% > 0.5%");
  return c.outcome("10000 nodes, peak " + std::to_string(peak_tasks) + " tasks, 60 min in " + Num(wall) +
                   " s, cpu used " + Num(used) + ", burst peak overloaded " + Num(100 * peak_burst) + "%, worst overloaded ratio (min 30-60) " + Num(100 * worst_steady) +
                   "%, " + std::to_string(migrations) + " migrations");
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "worked examples", 1, WorkedExamples},
      {2, "constraint truth table", 1, ConstraintGolden},
      {3, "full scan equals exhaustive enumeration", 60, FullScanOracle},
      {4, "strategy soundness on Test I", 300, StrategySoundness},
      {5, "seeded GA beats plain GA", 900, SeedingBenefit},
      {6, "LMDT properties", 1, LmdtProperties},
      {7, "scoring surface shape", 5, ScoringSurface},
      {8, "protocol safety", 600, ProtocolSafety},
      {9, "protocol liveness", 600, ProtocolLiveness},
      {10, "scoring pairing order", 1200, ScoringPairing},
      {11, "determinism and snapshot", 120, DeterminismAndSnapshot},
      {12, "performance smoke", 600, Performance},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& cr : all) {
    if (!pick.empty() && !pick.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (s > cr.limit_s) {
      o.pass = false;
      o.detail += "; took " + Num(s) + " s, limit " + Num(cr.limit_s) + " s";
    }
    if (!o.pass) ++failed;
    std::printf("%s [%d] %s (%.2fs): %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
