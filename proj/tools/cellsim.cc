// Command-line front end: run, bench, snapshot, synth.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cellsim/common/errors.h"
#include "cellsim/common/rng.h"
#include "cellsim/harness/run_config.h"
#include "cellsim/harness/simulation.h"
#include "cellsim/metaheuristics/fixture.h"
#include "cellsim/metaheuristics/strategies.h"
#include "cellsim/workload/synth.h"
#include "cellsim/workload/gcd_parser.h"
#include "cellsim/workload/trace_writer.h"

#ifndef CELLSIM_DEFAULT_FIXTURE_DIR
#define CELLSIM_DEFAULT_FIXTURE_DIR "data/fixtures"
#endif

namespace {

using namespace cellsim;
namespace mh = metaheuristics;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kTraceError = 2;
constexpr int kInfeasible = 3;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct RunFlags {
  std::string config_file;
  std::optional<std::string> mode, gcd_dir, gcd_schema, synth_file, fixture_dir, scenario;
  std::uint64_t seed = 0;
  std::optional<double> tick_s, speed, compaction, time_budget;
  std::optional<std::int64_t> ticks;
  std::optional<int> scale, usage_every, snapshot_every, snapshot_keep, rounds, brokers,
      balance_every;
  std::optional<std::size_t> recommendations;
  std::optional<std::uint64_t> candidate_budget;
  std::optional<std::string> out, name, resume, initial_scorer, realloc_scorer, strategy;
  bool prefetch = false, message_trace = false;
};

harness::RunConfig BuildRunConfig(const RunFlags& f) {
  harness::RunConfig c;
  if (!f.config_file.empty()) c = harness::RunConfig::FromFile(f.config_file);
  if (f.mode) c.mode = harness::ParseMode(*f.mode);
  // A source given on the command line replaces the file's source.
  if (f.gcd_dir || f.synth_file || f.fixture_dir) {
    c.gcd_dir.reset();
    c.synth.reset();
    c.fixture_dir.reset();
  }
  if (f.gcd_dir) c.gcd_dir = *f.gcd_dir;
  if (f.gcd_schema) c.gcd_schema_json = ReadFile(*f.gcd_schema);
  if (f.synth_file) c.synth = workload::SynthConfig::FromFile(*f.synth_file);
  if (f.fixture_dir) {
    c.fixture_dir = *f.fixture_dir;
    c.mode = harness::Mode::kMetaheuristic;
  }
  if (f.scenario) c.scenario = *f.scenario;
  c.seed = f.seed;
  if (f.tick_s) c.tick_length = static_cast<SimTime>(*f.tick_s * 1e6 + 0.5);
  if (f.speed) c.speed_factor = *f.speed;
  if (f.ticks) c.max_ticks = *f.ticks;
  if (f.scale) c.scale_factor = *f.scale;
  if (f.compaction) c.compaction = *f.compaction;
  if (f.prefetch) c.prefetch = true;
  if (f.out) c.output_dir = *f.out;
  if (f.name) c.run_name = *f.name;
  if (f.usage_every) c.usage_dump_interval = *f.usage_every;
  if (f.snapshot_every) c.snapshot_interval = *f.snapshot_every;
  if (f.snapshot_keep) c.snapshot_keep = *f.snapshot_keep;
  if (f.resume) c.resume_from = *f.resume;
  if (f.message_trace) c.message_trace = true;
  if (f.rounds) c.masb.rounds_per_tick = *f.rounds;
  if (f.brokers) c.masb.broker_count = *f.brokers;
  if (f.recommendations) c.masb.recommendation_count = *f.recommendations;
  if (f.initial_scorer) c.masb.initial_scorer = masb::ParseScorer(*f.initial_scorer);
  if (f.realloc_scorer) c.masb.realloc_scorer = masb::ParseScorer(*f.realloc_scorer);
  if (f.strategy) c.strategy = mh::ParseStrategy(*f.strategy);
  if (f.balance_every) c.balance_interval_ticks = *f.balance_every;
  if (f.candidate_budget) c.balancer.candidate_budget = *f.candidate_budget;
  if (f.time_budget) c.balancer.time_budget_s = *f.time_budget;
  c.finalize();
  return c;
}

int DoRun(const RunFlags& f) {
  harness::RunConfig cfg = BuildRunConfig(f);
  if (cfg.fixture_dir) {
    std::ofstream csv;
    std::ostream* out = &std::cout;
    if (f.out) {
      std::filesystem::create_directories(cfg.output_dir);
      csv.open(std::filesystem::path(cfg.output_dir) / (cfg.run_name + "-balancer.csv"));
      out = &csv;
    }
    return harness::RunFixture(cfg, *out, &std::cerr);
  }
  harness::Simulation sim(cfg);
  const int rc = sim.run();
  std::cerr << "ticks=" << sim.tick() << " migrations=" << sim.totals().migrations
            << " stc_mb=" << sim.totals().stc_mb << " logs=" << cfg.output_dir << "/logs\n";
  return rc;
}

struct BenchFlags {
  std::string fixture = CELLSIM_DEFAULT_FIXTURE_DIR;
  std::string scenarios = "I,II,III";
  std::string strategies = "greedy,tabu,sa,ga,sga";
  std::uint64_t seed = 0;
  int seeds = 1;
  std::optional<std::uint64_t> candidate_budget;
  std::optional<double> time_budget;
  bool scenario_budget = false;
  std::string out;
};

int DoBench(const BenchFlags& f) {
  if (f.seeds < 1) throw ConfigError("--seeds must be >= 1");
  const auto fixture = mh::BalancerFixture::Load(f.fixture);
  std::vector<mh::StrategyKind> kinds;
  for (const auto& s : SplitList(f.strategies)) kinds.push_back(mh::ParseStrategy(s));
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw ConfigError("cannot write " + f.out);
    out = &file;
  }
  mh::WriteBenchHeader(*out);
  bool all_stable = true;
  for (const auto& name : SplitList(f.scenarios)) {
    const auto& sc = fixture.scenario(name);
    auto problem = fixture.problem_for(sc);
    for (auto k : kinds) {
      for (int i = 0; i < f.seeds; ++i) {
        mh::StrategyConfig cfg;
        const std::uint64_t seed = f.seed + static_cast<std::uint64_t>(i);
        cfg.seed = seed;
        if (f.candidate_budget) cfg.candidate_budget = *f.candidate_budget;
        if (f.time_budget) cfg.time_budget_s = *f.time_budget;
        if (f.scenario_budget) cfg.time_budget_s = sc.time_budget_s;
        if (k == mh::StrategyKind::kFullScan) cfg.full_scan_leaf_cap = 1e60;
        try {
          const auto r = mh::run_strategy(k, problem, cfg);
          all_stable = all_stable && r.stable;
          mh::WriteBenchRow(*out, sc.name, k, seed, r);
        } catch (const mh::SearchSpaceTooLarge& e) {
          std::cerr << sc.name << " " << mh::StrategyName(k) << ": " << e.what() << "\n";
        } catch (const InfeasibleError& e) {
          std::cerr << sc.name << " " << mh::StrategyName(k) << ": " << e.what() << "\n";
          all_stable = false;
        }
        out->flush();
      }
    }
  }
  return all_stable ? kOk : kInfeasible;
}

int DoSnapshot(const std::string& path, bool dump_config) {
  const auto j = harness::LoadSnapshot(path);
  const auto& cell = j.at("cell");
  std::size_t online = 0, tasks = 0;
  for (const auto& n : cell.at("nodes")) online += n.at("online").get<bool>() ? 1 : 0;
  for (const auto& t : cell.at("tasks")) tasks += t.is_null() ? 0 : 1;
  std::cout << "format " << j.at("format").get<std::string>() << " v" << j.at("version") << "\n"
            << "tick " << j.at("tick") << "\n"
            << "mode " << j.at("config").at("mode").get<std::string>() << "\n"
            << "online_nodes " << online << "\n"
            << "live_tasks " << tasks << "\n"
            << "stc_mb " << j.at("totals").at("stc_mb") << "\n"
            << "state_hash " << j.at("state_hash").get<std::string>() << "\n";
  if (dump_config) std::cout << j.at("config").dump(2) << "\n";
  return kOk;
}

struct SynthFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> nodes, tasks;
  std::optional<double> minutes, arrivals;
  std::string out;
  bool print_config = false;
};

int DoSynth(const SynthFlags& f) {
  workload::SynthConfig cfg;
  if (!f.config_file.empty()) cfg = workload::SynthConfig::FromFile(f.config_file);
  if (f.seed) cfg.seed = *f.seed;
  if (f.nodes) cfg.node_count = *f.nodes;
  if (f.tasks) cfg.initial_tasks = *f.tasks;
  if (f.minutes) cfg.duration_minutes = *f.minutes;
  if (f.arrivals) cfg.task_arrival_rate = *f.arrivals;
  cfg.validate();
  if (f.print_config) {
    std::cout << cfg.to_json().dump(2) << "\n";
    if (f.out.empty()) return kOk;
  }
  if (f.out.empty()) throw ConfigError("--out is required unless --print-config is given");
  const auto events = workload::synth_generate(cfg);
  workload::WriteTraceDirectory(events, f.out, workload::TraceSchema::Default().time_offset);
  std::cerr << "wrote " << events.size() << " events to " << f.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster cell simulator: trace replay, agent-based balancing and metaheuristics"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Simulate a cell tick by tick");
  run->add_option("--config", rf.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  run->add_option("--mode", rf.mode, "replay, masb or metaheuristic");
  run->add_option("--gcd-dir", rf.gcd_dir, "Directory holding a Google cluster-data trace");
  run->add_option("--gcd-schema", rf.gcd_schema, "JSON overrides for the trace column layout");
  run->add_option("--synth", rf.synth_file, "JSON synthetic workload configuration");
  run->add_option("--fixture", rf.fixture_dir, "Balancer benchmark directory (metaheuristic mode)");
  run->add_option("--scenario", rf.scenario, "Benchmark scenario name");
  run->add_option("--seed", rf.seed, "Base random seed")->required();
  run->add_option("--tick-s", rf.tick_s, "Tick length in simulated seconds");
  run->add_option("--speed", rf.speed, "Simulated-to-wall time ratio (0 = unpaced)");
  run->add_option("--ticks", rf.ticks, "Stop after this many ticks");
  run->add_option("--scale", rf.scale, "Cell multiplication factor (1, 2, 4, 8)");
  run->add_option("--compaction", rf.compaction, "Fraction of nodes removed after the first tick");
  run->add_flag("--prefetch", rf.prefetch, "Read trace files on background threads");
  run->add_option("--out", rf.out, "Output directory");
  run->add_option("--name", rf.name, "Run name used in output file names");
  run->add_option("--usage-every", rf.usage_every, "Ticks between usage dumps (0 = off)");
  run->add_option("--snapshot-every", rf.snapshot_every, "Ticks between snapshots (0 = off)");
  run->add_option("--snapshot-keep", rf.snapshot_keep, "Snapshots retained per run");
  run->add_option("--resume", rf.resume, "Snapshot file to resume from");
  run->add_flag("--message-trace", rf.message_trace, "Write every agent message to a CSV log");
  run->add_option("--rounds", rf.rounds, "Agent rounds per tick");
  run->add_option("--brokers", rf.brokers, "Number of broker agents");
  run->add_option("--recommendations", rf.recommendations, "Candidate nodes per broker quote");
  run->add_option("--initial-scorer", rf.initial_scorer, "sias, sias-gain, sras or sras-gain");
  run->add_option("--realloc-scorer", rf.realloc_scorer, "sias, sias-gain, sras or sras-gain");
  run->add_option("--strategy", rf.strategy, "greedy, tabu, sa, ga, sga or full-scan");
  run->add_option("--balance-every", rf.balance_every, "Ticks between balancer runs");
  run->add_option("--candidate-budget", rf.candidate_budget, "Balancer candidate budget");
  run->add_option("--time-budget", rf.time_budget, "Balancer wall-clock budget in seconds");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Compare balancer strategies on the benchmark fixture");
  bench->add_option("--fixture", bf.fixture, "Benchmark directory")->check(CLI::ExistingDirectory);
  bench->add_option("--scenarios", bf.scenarios, "Comma-separated scenario names");
  bench->add_option("--strategies", bf.strategies, "Comma-separated strategy names");
  bench->add_option("--seed", bf.seed, "First seed")->required();
  bench->add_option("--seeds", bf.seeds, "Number of consecutive seeds");
  bench->add_option("--candidate-budget", bf.candidate_budget, "Candidates per strategy run");
  bench->add_option("--time-budget", bf.time_budget, "Seconds per strategy run");
  bench->add_flag("--scenario-budget", bf.scenario_budget, "Use each scenario's own time budget");
  bench->add_option("--out", bf.out, "CSV output file (default stdout)");

  std::string snap_path;
  bool snap_config = false;
  auto* snap = app.add_subcommand("snapshot", "Validate and summarise a snapshot file");
  snap->add_option("file", snap_path, "Snapshot file")->required();
  snap->add_flag("--config", snap_config, "Also print the embedded run configuration");

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Write a synthetic workload as a trace directory");
  synth->add_option("--config", sf.config_file, "JSON synthetic workload configuration")
      ->check(CLI::ExistingFile);
  synth->add_option("--seed", sf.seed, "Workload seed");
  synth->add_option("--nodes", sf.nodes, "Node count");
  synth->add_option("--tasks", sf.tasks, "Initial task count");
  synth->add_option("--minutes", sf.minutes, "Trace duration in minutes");
  synth->add_option("--arrivals", sf.arrivals, "New tasks per minute");
  synth->add_option("--out", sf.out, "Output directory");
  synth->add_flag("--print-config", sf.print_config, "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return DoRun(rf);
    if (*bench) return DoBench(bf);
    if (*snap) return DoSnapshot(snap_path, snap_config);
    if (*synth) return DoSynth(sf);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const TraceError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kTraceError;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kTraceError;
  }
  return kConfigError;
}
