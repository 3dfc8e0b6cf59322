#ifndef CELLSIM_HARNESS_SIMULATION_H_
#define CELLSIM_HARNESS_SIMULATION_H_

#include <cstdint>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellsim/harness/run_config.h"
#include "cellsim/masb/engine.h"
#include "cellsim/workload/anomalies.h"
#include "cellsim/workload/cell.h"
#include "cellsim/workload/events.h"

namespace cellsim::harness {

struct TickRecord {
  std::int64_t tick = 0;
  std::size_t idle = 0, sta = 0, ta = 0, pa = 0, da = 0, overloaded = 0;
  std::uint64_t migrations_attempted = 0;
  std::uint64_t migrations_completed = 0;
  std::uint64_t collisions = 0;
  double cpu_used_ratio = 0, mem_used_ratio = 0;
  double cpu_req_ratio = 0, mem_req_ratio = 0;
  double stc_mb = 0;
};

void WriteTickHeader(std::ostream& out);
void WriteTickRow(std::ostream& out, const TickRecord& r);

// Per-node class and usage, one row per online node.
void WriteUsageDump(std::ostream& out, const workload::Cell& cell);

inline constexpr int kSnapshotVersion = 1;

struct RunTotals {
  std::uint64_t events_applied = 0;
  std::uint64_t events_ignored = 0;
  std::uint64_t anomaly_drops = 0;
  std::uint64_t migrations = 0;
  std::uint64_t forced_migrations = 0;
  double stc_mb = 0;
};

// Drives one cell through the tick loop. Construct, then either call
// run() for the full CLI behaviour or step() from tests.
class Simulation {
 public:
  explicit Simulation(RunConfig cfg);
  ~Simulation();

  // One tick: collect window, filter anomalies, apply events, engine step.
  TickRecord step();
  bool finished() const;
  std::int64_t tick() const { return tick_; }

  // Full run with log, CSV and snapshot outputs. Returns the exit code.
  int run();

  const workload::Cell& cell() const { return cell_; }
  workload::Cell& mutable_cell() { return cell_; }
  const masb::Engine* engine() const { return engine_.get(); }
  const RunTotals& totals() const { return totals_; }
  const RunConfig& config() const { return cfg_; }
  const std::vector<masb::MigrationRecord>& migration_log() const { return migration_log_; }

  // Optional sinks; owned by the caller.
  void set_log(std::ostream* out) { log_ = out; }
  void set_error_log(std::ostream* out);
  void set_message_trace(std::ostream* out);
  void set_sample_log(std::ostream* out);

  nlohmann::json snapshot() const;
  // Replaces cell, engine and counters; skips trace events before the
  // snapshot's tick. Throws TraceError on a malformed or foreign snapshot.
  void restore(const nlohmann::json& j);

 private:
  void open_sources();
  void apply_batch(std::vector<workload::WorkloadEvent>& events);
  void balance(TickRecord& rec);
  TickRecord record(std::int64_t tick) const;

  RunConfig cfg_;
  workload::Cell cell_;
  std::unique_ptr<masb::Engine> engine_;
  std::vector<std::unique_ptr<workload::EventSource>> sources_;
  std::shared_ptr<workload::AnomalyLog> anomalies_;
  std::int64_t tick_ = 0;
  bool exhausted_ = false;
  std::set<model::NodeId> removed_nodes_;
  RunTotals totals_;
  std::vector<masb::MigrationRecord> migration_log_;
  std::ostream* log_ = nullptr;
  std::ostream* errors_ = nullptr;
};

// Writes `j` atomically as <dir>/<run>-<tick>.snapshot.json and keeps the
// newest `keep` files of that run. Returns the written path.
std::string SaveSnapshot(const nlohmann::json& j, const std::string& dir, const std::string& run,
                         std::int64_t tick, int keep);
// Throws TraceError on unreadable, corrupt or version-mismatched files.
nlohmann::json LoadSnapshot(const std::string& path);
// Stable digest of the simulated state in a snapshot.
std::string SnapshotStateHash(const nlohmann::json& j);

// Fixture mode: one strategy run on a benchmark scenario, written as a
// bench CSV row. Returns the exit code.
int RunFixture(const RunConfig& cfg, std::ostream& csv, std::ostream* log);

}  // namespace cellsim::harness

#endif  // CELLSIM_HARNESS_SIMULATION_H_
