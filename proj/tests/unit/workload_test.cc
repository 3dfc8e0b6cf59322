#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "cellsim/common/errors.h"
#include "cellsim/workload/anomalies.h"
#include "cellsim/workload/cell.h"
#include "cellsim/workload/constraints.h"
#include "cellsim/workload/gcd_parser.h"
#include "cellsim/workload/state_store.h"
#include "cellsim/workload/synth.h"
#include "cellsim/workload/trace_writer.h"
#include "cellsim/workload/window.h"
#include "support/scenarios.h"

namespace cellsim::workload {
namespace {

using model::ConstraintOp;

WorkloadEvent Ev(SimTime at, EventPayload p, std::uint64_t seq = 0) {
  WorkloadEvent e;
  e.timestamp = at;
  e.payload = std::move(p);
  e.seq = seq;
  return e;
}

model::NodeSpec N(const std::string& id, model::AttributeMap attrs = {}) {
  return {id, {1.0, 1.0}, std::move(attrs)};
}

model::TaskSpec T(const std::string& id, double cpu, bool prod = false) {
  model::TaskSpec t;
  t.id = id;
  t.required = {cpu, cpu};
  t.used = {cpu / 2, cpu / 2};
  t.production = prod;
  return t;
}

TEST(Constraints, NumericComparisonIsInteger) {
  model::AttributeMap a{{"k", "12"}};
  EXPECT_TRUE(check_constraint({ConstraintOp::kGreaterThan, "k", "9"}, a));
  EXPECT_FALSE(check_constraint({ConstraintOp::kLessThan, "k", "9"}, a));
  // Non-numeric operands never satisfy an ordering constraint.
  model::AttributeMap b{{"k", "abc"}};
  EXPECT_FALSE(check_constraint({ConstraintOp::kGreaterThan, "k", "1"}, b));
  EXPECT_EQ(ParseInteger("-7"), -7);
  EXPECT_FALSE(ParseInteger("7x").has_value());
}

TEST(Constraints, ConjunctionAndBetween) {
  const std::vector<model::TaskConstraint> between = {{ConstraintOp::kGreaterThan, "a", "5"},
                                                      {ConstraintOp::kLessThan, "a", "10"}};
  EXPECT_TRUE(matches_constraints(between, {{"a", "9"}}));
  EXPECT_FALSE(matches_constraints(between, {{"a", "10"}}));
  EXPECT_FALSE(matches_constraints(between, {{"a", "99"}}));
  EXPECT_TRUE(matches_constraints({}, {}));
}

TEST(Events, TieOrderAtSameTimestamp) {
  std::vector<WorkloadEvent> v = {
      Ev(5, UpdateTaskUsedResources{"t", {0.1, 0.1}, 1.0, std::nullopt}),
      Ev(5, AddTask{T("t", 0.1)}),
      Ev(5, RemoveNode{"n"}),
      Ev(5, AddNode{N("n")}),
      Ev(4, RemoveTask{"x"}),
  };
  std::sort(v.begin(), v.end(), EventLess);
  EXPECT_EQ(v[0].kind(), EventKind::kRemoveTask);
  EXPECT_EQ(v[1].kind(), EventKind::kRemoveNode);
  EXPECT_EQ(v[2].kind(), EventKind::kAddNode);
  EXPECT_EQ(v[3].kind(), EventKind::kAddTask);
  EXPECT_EQ(v[4].kind(), EventKind::kUpdateTaskUsedResources);
}

TEST(Window, CollectsHalfOpenInterval) {
  VectorSource src({Ev(0, AddNode{N("a")}), Ev(59, AddNode{N("b")}), Ev(60, AddNode{N("c")})});
  auto b = collect_window({&src}, 0, 60);
  EXPECT_EQ(b.events.size(), 2u);
  EXPECT_FALSE(b.end_of_trace);
  auto c = collect_window({&src}, 60, 120);
  EXPECT_EQ(c.events.size(), 1u);
  EXPECT_TRUE(c.end_of_trace);
}

TEST(Window, MergesSourcesInOrder) {
  VectorSource a({Ev(10, AddTask{T("x", 0.1)}, 1)}, "a");
  VectorSource b({Ev(10, AddNode{N("n")}, 0)}, "b");
  auto batch = collect_window({&a, &b}, 0, 60);
  ASSERT_EQ(batch.events.size(), 2u);
  EXPECT_EQ(batch.events[0].kind(), EventKind::kAddNode);
}

TEST(Window, PrefetchMatchesDirect) {
  SynthConfig cfg;
  cfg.node_count = 20;
  cfg.initial_tasks = 200;
  cfg.task_arrival_rate = 10;
  cfg.duration_minutes = 20;
  const auto direct = synth_generate(cfg);
  PrefetchSource pf(std::make_unique<SynthSource>(cfg), Minutes(2), 64);
  std::vector<WorkloadEvent> fetched;
  while (const auto* e = pf.peek()) {
    fetched.push_back(*e);
    pf.pop();
  }
  EXPECT_EQ(fetched, direct);
}

TEST(Cell, PlacementSumsAndConservation) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  const auto n = cell.add_node(N("n"));
  const auto m = cell.add_node(N("m"));
  const auto a = cell.add_task(T("a", 0.2, true));
  const auto b = cell.add_task(T("b", 0.4));
  EXPECT_EQ(cell.pending().size(), 2u);
  cell.place(a, n);
  cell.place(b, n);
  EXPECT_DOUBLE_EQ(cell.used_sum(n)[0], 0.3);
  EXPECT_DOUBLE_EQ(cell.required_sum(n)[1], 0.6);
  EXPECT_EQ(cell.production_required_sum(n), (model::ResourceVector{0.2, 0.2}));
  cell.move(b, m);
  EXPECT_EQ(cell.used_sum(m), (model::ResourceVector{0.2, 0.2}));
  EXPECT_EQ(cell.used_sum(n), (model::ResourceVector{0.1, 0.1}));
  std::string why;
  EXPECT_TRUE(testing::OracleConservation(cell, &why)) << why;
  EXPECT_THROW(cell.place(a, m), DomainError);
}

TEST(Cell, RemoveNodeDisplacesResidents) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  const auto n = cell.add_node(N("n"));
  const auto a = cell.add_task(T("a", 0.2));
  cell.place(a, n);
  const auto displaced = cell.remove_node(n);
  ASSERT_EQ(displaced.size(), 1u);
  EXPECT_TRUE(cell.pending().count(a));
  EXPECT_EQ(cell.online_node_count(), 0u);
  // The node id comes back online on re-add.
  EXPECT_EQ(cell.add_node(N("n")), n);
  EXPECT_EQ(cell.online_node_count(), 1u);
  EXPECT_TRUE(testing::OracleConservation(cell));
}

TEST(Cell, ApplyEventIgnoresUnknownIds) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  EXPECT_FALSE(apply_event(cell, Ev(0, RemoveTask{"nope"})).applied);
  EXPECT_FALSE(apply_event(cell, Ev(0, UpdateNodeTotalResources{"nope", {1, 1}})).applied);
  EXPECT_TRUE(apply_event(cell, Ev(0, AddTask{T("t", 0.1)})).applied);
  EXPECT_FALSE(apply_event(cell, Ev(0, AddTask{T("t", 0.1)})).applied);
}

TEST(Cell, UsageMarksTaskStarted) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  auto t = T("t", 0.1);
  t.unstarted = true;
  t.used = {0, 0};
  const auto i = cell.add_task(t);
  cell.set_task_used(i, {0.05, 0.05}, 12.0);
  EXPECT_FALSE(cell.task(i).spec.unstarted);
  EXPECT_EQ(cell.task(i).spec.migration_cost_mb, 12.0);
}

TEST(Cell, JsonRoundTrip) {
  testing::LoadedCellSpec spec;
  spec.nodes = 15;
  spec.constraint_rate = 0.3;
  spec.unstarted_fraction = 0.1;
  auto cell = testing::MakeLoadedCell(spec);
  const auto back = Cell::from_json(cell.to_json());
  EXPECT_EQ(back.to_json(), cell.to_json());
  EXPECT_EQ(back.live_task_count(), cell.live_task_count());
}

TEST(Anomalies, DropsTasksWithUnmatchableConstraints) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  cell.add_node(N("n", {{"arch", "x86"}}));
  auto ok = T("ok", 0.1);
  ok.constraints = {{ConstraintOp::kEqual, "arch", "x86"}};
  auto bad = T("bad", 0.1);
  bad.constraints = {{ConstraintOp::kEqual, "arch", "sparc"}};
  EventBatch batch;
  batch.events = {Ev(1, AddTask{ok}), Ev(1, AddTask{bad}),
                  Ev(2, UpdateTaskUsedResources{"bad", {0.1, 0.1}, 1.0, std::nullopt})};
  auto r = filter_anomalies(cell, batch);
  EXPECT_EQ(r.batch.events.size(), 1u);
  ASSERT_EQ(r.dropped_tasks.size(), 1u);
  EXPECT_EQ(r.dropped_tasks[0], "bad");
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.reports[0].kind, AnomalyKind::kUnmatchableConstraints);
}

TEST(Anomalies, NodeArrivingInSameBatchCounts) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  auto t = T("t", 0.1);
  t.constraints = {{ConstraintOp::kEqual, "arch", "arm"}};
  EventBatch batch;
  batch.events = {Ev(0, AddNode{N("n", {{"arch", "arm"}})}), Ev(0, AddTask{t})};
  EXPECT_TRUE(filter_anomalies(cell, batch).dropped_tasks.empty());
}

TEST(Anomalies, FlagsGlobalMemoryOverUse) {
  Cell cell(model::ResourceTypeCatalog::CpuMemory());
  const auto n = cell.add_node(N("n"));
  const auto t = cell.add_task(T("t", 0.1));
  cell.place(t, n);
  EventBatch batch;
  batch.events = {Ev(0, UpdateTaskUsedResources{"t", {0.1, 1.5}, 1.0, std::nullopt})};
  auto r = filter_anomalies(cell, batch);
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.reports[0].kind, AnomalyKind::kOverUsageWindow);
  EXPECT_EQ(r.batch.events.size(), 1u);  // reported, not dropped
}

TEST(Gcd, TaskActionMapping) {
  TaskRecord r;
  r.task = "1-0";
  r.cpu_request = 0.1;
  r.memory_request = 0.2;
  r.priority = 9;
  r.production = true;
  auto submit = map_task_action(0, r);
  ASSERT_TRUE(submit);
  const auto& add = std::get<AddTask>(submit->payload);
  EXPECT_TRUE(add.task.unstarted);
  EXPECT_TRUE(add.task.production);
  EXPECT_FALSE(map_task_action(1, r).has_value());
  for (int code : {2, 3, 4, 5, 6}) EXPECT_EQ(map_task_action(code, r)->kind(), EventKind::kRemoveTask);
  for (int code : {7, 8}) {
    EXPECT_EQ(map_task_action(code, r)->kind(), EventKind::kUpdateTaskRequiredResources);
  }
  AnomalyLog log;
  EXPECT_FALSE(map_task_action(42, r, &log).has_value());
  EXPECT_EQ(log.total(AnomalyKind::kCorruptRecord), 1u);
}

TEST(Gcd, SplitCsvKeepsEmptyFields) {
  std::vector<std::string> f;
  SplitCsv("1,,abc,", f);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[3], "");
}

class TraceDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("cellsim-trace-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

std::vector<WorkloadEvent> ReadAll(const std::string& dir, std::shared_ptr<AnomalyLog> log) {
  auto parsers = OpenTraceDirectory(dir, TraceSchema::Default(), log);
  std::vector<EventSource*> srcs;
  for (auto& p : parsers) srcs.push_back(p.get());
  return collect_window(srcs, INT64_MIN, INT64_MAX, log.get()).events;
}

TEST_F(TraceDir, SyntheticTraceRoundTrip) {
  SynthConfig cfg;
  cfg.node_count = 30;
  cfg.initial_tasks = 300;
  cfg.task_arrival_rate = 5;
  cfg.duration_minutes = 30;
  cfg.constraint_rate = 0.3;
  const auto events = synth_generate(cfg);
  WriteTraceDirectory(events, dir_.string(), TraceSchema::Default().time_offset);
  auto log = std::make_shared<AnomalyLog>();
  const auto back = ReadAll(dir_.string(), log);
  // Attribute rows may regroup, so compare the resulting cells.
  Cell want(model::ResourceTypeCatalog::CpuMemory()), got(model::ResourceTypeCatalog::CpuMemory());
  for (const auto& e : events) apply_event(want, e);
  for (const auto& e : back) apply_event(got, e);
  EXPECT_EQ(want.to_json(), got.to_json());
  EXPECT_GT(want.live_task_count(), 0u);
  EXPECT_EQ(log->total(AnomalyKind::kCorruptRecord), 0u);
  // Timestamps survive the offset shift.
  EXPECT_EQ(events.front().timestamp, back.front().timestamp);
  EXPECT_EQ(events.back().timestamp, back.back().timestamp);
}

TEST_F(TraceDir, CorruptLinesAreSkippedAndCounted) {
  std::filesystem::create_directories(dir_ / "machine_events");
  std::ofstream(dir_ / "machine_events" / "part-00000-of-00001.csv")
      << "0,1,0,,0.5,0.5\n"
      << "garbage\n"
      << "700000000,2,0,,0.25,0.5\n";
  auto log = std::make_shared<AnomalyLog>();
  const auto events = ReadAll(dir_.string(), log);
  EXPECT_EQ(events.size(), 2u);
  EXPECT_EQ(log->total(AnomalyKind::kCorruptRecord), 1u);
}

TEST_F(TraceDir, MissingDirectoryIsTraceError) {
  auto log = std::make_shared<AnomalyLog>();
  EXPECT_THROW(OpenTraceDirectory((dir_ / "absent").string(), TraceSchema::Default(), log),
               TraceError);
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.node_count = 10;
  cfg.initial_tasks = 50;
  cfg.duration_minutes = 10;
  EXPECT_EQ(synth_generate(cfg), synth_generate(cfg));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(synth_generate(cfg), synth_generate(other));
}

TEST(Synth, ConfigJsonRoundTripAndValidation) {
  SynthConfig cfg;
  cfg.bursts = {{5, 0.2, 1.4}};
  EXPECT_EQ(SynthConfig::FromJson(cfg.to_json()).to_json(), cfg.to_json());
  auto bad = cfg;
  bad.batch_fraction = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(StateStore, ReplaceWithSwapsAtomically) {
  StateStore<int, int> store;
  store.put(1, 0);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 1000; ++k) store.replace_with(1, [](int v) { return v + 1; });
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(store.get(1), 4000);
  EXPECT_FALSE(store.replace_with(2, [](int v) { return v; }).has_value());
  EXPECT_TRUE(store.erase(1));
  EXPECT_EQ(store.size(), 0u);
}

}  // namespace
}  // namespace cellsim::workload
