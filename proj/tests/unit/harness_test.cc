#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cellsim/common/errors.h"
#include "cellsim/harness/run_config.h"
#include "cellsim/harness/scale.h"
#include "cellsim/harness/simulation.h"
#include "cellsim/workload/synth.h"
#include "support/scenarios.h"

namespace cellsim::harness {
namespace {

namespace fs = std::filesystem;

workload::SynthConfig SmallSynth(std::uint64_t seed = 7) {
  workload::SynthConfig s;
  s.seed = seed;
  s.node_count = 20;
  s.initial_tasks = 150;
  s.task_arrival_rate = 5;
  s.duration_minutes = 15;
  return s;
}

RunConfig SynthRun(Mode mode = Mode::kMasb) {
  RunConfig c;
  c.mode = mode;
  c.synth = SmallSynth();
  c.seed = 11;
  c.max_ticks = 8;
  return c;
}

fs::path TempDir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cellsim-harness-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(RunConfig, RequiresSeed) {
  auto c = SynthRun();
  c.seed.reset();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, ExactlyOneSource) {
  auto c = SynthRun();
  c.gcd_dir = "/tmp";
  EXPECT_THROW(c.validate(), ConfigError);
  c.gcd_dir.reset();
  c.synth.reset();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, FixtureNeedsMetaheuristicMode) {
  RunConfig c;
  c.seed = 1;
  c.fixture_dir = testing::FixtureDir();
  c.mode = Mode::kMasb;
  EXPECT_THROW(c.validate(), ConfigError);
  c.mode = Mode::kMetaheuristic;
  EXPECT_NO_THROW(c.finalize());
}

TEST(RunConfig, ScaleAndCompactionRanges) {
  for (int f : {1, 2, 4, 8}) {
    auto c = SynthRun();
    c.scale_factor = f;
    EXPECT_NO_THROW(c.validate()) << f;
  }
  for (int f : {0, 3, 16}) {
    auto c = SynthRun();
    c.scale_factor = f;
    EXPECT_THROW(c.validate(), ConfigError) << f;
  }
  for (double x : {-0.1, 1.0}) {
    auto c = SynthRun();
    c.compaction = x;
    EXPECT_THROW(c.validate(), ConfigError) << x;
  }
  auto c = SynthRun();
  c.run_name = "a/b";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, JsonRoundTrip) {
  auto c = SynthRun(Mode::kReplay);
  c.scale_factor = 4;
  c.compaction = 0.25;
  c.run_name = "rt";
  c.snapshot_interval = 3;
  const auto j = c.to_json();
  const auto back = RunConfig::FromJson(j);
  EXPECT_EQ(back.to_json(), j);
  EXPECT_EQ(back.mode, Mode::kReplay);
  EXPECT_EQ(back.scale_factor, 4);
  EXPECT_EQ(*back.seed, 11u);
}

TEST(RunConfig, ModeNames) {
  for (auto m : {Mode::kReplay, Mode::kMasb, Mode::kMetaheuristic}) EXPECT_EQ(ParseMode(ToString(m)), m);
  EXPECT_THROW(ParseMode("random"), ConfigError);
}

TEST(Scale, CloneIds) {
  EXPECT_EQ(CloneId("m1", 0), "m1");
  EXPECT_EQ(CloneId("m1", 3), "m1~3");
}

std::vector<workload::WorkloadEvent> SynthEvents(const workload::SynthConfig& s) {
  workload::SynthSource src(s);
  std::vector<workload::WorkloadEvent> out;
  while (const auto* e = src.peek()) {
    out.push_back(*e);
    src.pop();
  }
  return out;
}

TEST(Scale, MultipliesEveryEvent) {
  auto s = SmallSynth();
  s.duration_minutes = 3;
  const auto base = SynthEvents(s);
  const auto scaled = scale_events(base, 4);
  ASSERT_EQ(scaled.size(), base.size() * 4);
  std::map<workload::EventKind, std::size_t> a, b;
  for (const auto& e : base) ++a[e.kind()];
  for (const auto& e : scaled) ++b[e.kind()];
  for (auto& [k, n] : a) EXPECT_EQ(b[k], 4 * n);
  // Subjects of the clones carry the suffix.
  std::size_t suffixed = 0;
  for (const auto& e : scaled) suffixed += e.subject().find('~') != std::string::npos;
  EXPECT_EQ(suffixed, base.size() * 3);
  // Sources only promise time order; ties are sorted when a window is collected.
  for (std::size_t i = 1; i < scaled.size(); ++i) EXPECT_LE(scaled[i - 1].timestamp, scaled[i].timestamp);
}

TEST(Scale, CollisionIsTraceError) {
  workload::WorkloadEvent a, b;
  model::NodeSpec n1{"x", {1, 1}, {}}, n2{"x~1", {1, 1}, {}};
  a.payload = workload::AddNode{n1};
  b.payload = workload::AddNode{n2};
  b.seq = 1;
  EXPECT_THROW(scale_events({a, b}, 2), TraceError);
}

TEST(Compaction, RemovesFloorFraction) {
  auto cell = testing::MakeLoadedCell({.nodes = 50, .load = 0.5, .seed = 3});
  const auto placed = cell.placed_task_count();
  const auto r = compact_cell(cell, 0.3, 5);
  EXPECT_EQ(r.removed.size(), 15u);
  EXPECT_EQ(cell.online_node_count(), 35u);
  EXPECT_EQ(cell.pending().size(), r.displaced.size());
  EXPECT_EQ(cell.placed_task_count() + r.displaced.size(), placed);
  EXPECT_TRUE(testing::OracleConservation(cell));

  auto again = testing::MakeLoadedCell({.nodes = 50, .load = 0.5, .seed = 3});
  EXPECT_EQ(compact_cell(again, 0.3, 5).removed, r.removed);
  EXPECT_TRUE(compact_cell(again, 0.0, 5).removed.empty());
}

TEST(Simulation, ReplayFollowsRecordedHosts) {
  auto cfg = SynthRun(Mode::kReplay);
  Simulation sim(cfg);
  while (!sim.finished()) sim.step();
  EXPECT_EQ(sim.engine(), nullptr);
  EXPECT_EQ(sim.totals().migrations, 0u);

  // Oracle: the last recorded host per task before the end of the last tick.
  const SimTime end = sim.tick() * cfg.tick_length;
  std::map<std::string, std::string> host;
  for (const auto& e : SynthEvents(*cfg.synth)) {
    if (e.timestamp >= end) break;
    if (e.kind() == workload::EventKind::kRemoveTask) host.erase(e.subject());
    if (e.kind() != workload::EventKind::kUpdateTaskUsedResources) continue;
    const auto& u = std::get<workload::UpdateTaskUsedResources>(e.payload);
    if (u.machine) host[u.task] = *u.machine;
  }
  const auto& cell = sim.cell();
  std::size_t checked = 0;
  for (const auto& [task, node] : host) {
    const auto t = cell.find_task(task);
    ASSERT_TRUE(t) << task;
    ASSERT_NE(cell.task(*t).node, kNoIndex) << task;
    EXPECT_EQ(cell.node(cell.task(*t).node).spec.id, node);
    ++checked;
  }
  EXPECT_GT(checked, 50u);
}

TEST(Simulation, MasbRunsAndConserves) {
  Simulation sim(SynthRun());
  ASSERT_NE(sim.engine(), nullptr);
  while (!sim.finished()) sim.step();
  EXPECT_EQ(sim.tick(), 8);
  EXPECT_TRUE(testing::OracleConservation(sim.cell()));
  EXPECT_GT(sim.totals().events_applied, 0u);
}

TEST(Simulation, TickCsvLayout) {
  std::ostringstream out;
  WriteTickHeader(out);
  TickRecord r;
  r.tick = 4;
  r.overloaded = 2;
  WriteTickRow(out, r);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header.rfind("tick,idle,sta,ta,pa,da,overloaded,", 0), 0u);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.rfind("4,0,0,0,0,0,2,", 0), 0u) << row;
}

TEST(Snapshot, SaveLoadAndRetention) {
  const auto dir = TempDir("snap");
  Simulation sim(SynthRun());
  std::string last;
  for (int i = 0; i < 4; ++i) {
    sim.step();
    last = SaveSnapshot(sim.snapshot(), dir.string(), "r", sim.tick(), 2);
  }
  std::size_t files = 0;
  for ([[maybe_unused]] auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 2u);
  const auto j = LoadSnapshot(last);
  EXPECT_EQ(SnapshotStateHash(j), SnapshotStateHash(sim.snapshot()));
  fs::remove_all(dir);
}

TEST(Snapshot, RefusesTamperedOrForeign) {
  const auto dir = TempDir("refuse");
  Simulation sim(SynthRun());
  sim.step();
  auto j = sim.snapshot();

  auto write = [&](const nlohmann::json& x) {
    const auto p = dir / "x.snapshot.json";
    std::ofstream(p) << x.dump();
    return p.string();
  };
  auto tampered = j;
  tampered["tick"] = 99;
  EXPECT_THROW(LoadSnapshot(write(tampered)), TraceError);
  auto old = j;
  old["version"] = kSnapshotVersion + 1;
  EXPECT_THROW(LoadSnapshot(write(old)), TraceError);
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_THROW(LoadSnapshot((dir / "bad.json").string()), TraceError);
  EXPECT_THROW(LoadSnapshot((dir / "missing.json").string()), TraceError);

  auto other = SynthRun();
  other.seed = 12;
  Simulation foreign(other);
  EXPECT_THROW(foreign.restore(j), TraceError);
  fs::remove_all(dir);
}

TEST(Simulation, RunWritesOutputs) {
  const auto dir = TempDir("run");
  auto cfg = SynthRun();
  cfg.output_dir = dir.string();
  cfg.run_name = "t";
  cfg.usage_dump_interval = 4;
  cfg.snapshot_interval = 4;
  Simulation sim(cfg);
  EXPECT_EQ(sim.run(), 0);
  EXPECT_TRUE(fs::exists(dir / "logs" / "t-ticks.csv"));
  EXPECT_TRUE(fs::exists(dir / "usage" / "t-3.csv"));
  EXPECT_FALSE(fs::is_empty(dir / "snapshots"));
  std::ifstream ticks(dir / "logs" / "t-ticks.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(ticks, l);) ++lines;
  EXPECT_EQ(lines, 9u);
  fs::remove_all(dir);
}

TEST(Fixture, RunFixtureWritesRow) {
  RunConfig c;
  c.mode = Mode::kMetaheuristic;
  c.fixture_dir = testing::FixtureDir();
  c.seed = 2;
  c.strategy = metaheuristics::StrategyKind::kGreedy;
  std::ostringstream csv;
  EXPECT_EQ(RunFixture(c, csv, nullptr), 0);
  EXPECT_NE(csv.str().find("I,greedy,2,true,"), std::string::npos) << csv.str();
}

int Cli(const std::string& args) {
  const std::string cmd = std::string(CELLSIM_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = TempDir("cli");
  const std::string fx = testing::FixtureDir();
  EXPECT_EQ(Cli("bench --fixture " + fx + " --scenarios I --strategies greedy --seed 1"), 0);
  EXPECT_EQ(Cli("bench --fixture " + fx + " --scenarios I --strategies greedy"), 1);  // no seed
  EXPECT_EQ(Cli("run --seed 1 --scale 3 --fixture " + fx), 1);
  EXPECT_EQ(Cli("run --seed 1 --gcd-dir " + (dir / "nothing").string() + " --out " + dir.string()), 2);
  std::ofstream(dir / "bad.json") << "{}";
  EXPECT_EQ(Cli("snapshot " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(Cli("synth --nodes 5 --tasks 20 --arrivals 2 --minutes 12 --out " + (dir / "trace").string()), 0);
  EXPECT_EQ(Cli("run --seed 1 --mode replay --gcd-dir " + (dir / "trace").string() + " --out " +
                (dir / "out").string()),
            0);
  // A written trace keeps its full length once read back.
  std::ifstream ticks(dir / "out" / "logs" / "run-ticks.csv");
  std::size_t rows = 0;
  for (std::string l; std::getline(ticks, l);) ++rows;
  EXPECT_GE(rows, 12u);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cellsim::harness
