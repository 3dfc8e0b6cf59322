#ifndef CELLSIM_HARNESS_RUN_CONFIG_H_
#define CELLSIM_HARNESS_RUN_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "cellsim/common/sim_time.h"
#include "cellsim/masb/engine.h"
#include "cellsim/metaheuristics/strategies.h"
#include "cellsim/workload/synth.h"

namespace cellsim::harness {

enum class Mode { kReplay, kMasb, kMetaheuristic };
const char* ToString(Mode m);
Mode ParseMode(const std::string& s);  // throws ConfigError

struct RunConfig {
  Mode mode = Mode::kMasb;

  // Trace sources; exactly one of gcd_dir, synth and fixture_dir.
  std::optional<std::string> gcd_dir;
  std::string gcd_schema_json;  // optional overrides for the GCD column layout
  std::optional<workload::SynthConfig> synth;
  std::optional<std::string> fixture_dir;  // metaheuristic benchmark instance
  std::string scenario = "I";

  std::optional<std::uint64_t> seed;
  SimTime tick_length = Minutes(1);
  double speed_factor = 0.0;  // simulated/wall time ratio; 0 runs unpaced
  std::optional<std::int64_t> max_ticks;
  int scale_factor = 1;
  double compaction = 0.0;
  bool prefetch = false;

  masb::EngineConfig masb;
  metaheuristics::StrategyKind strategy = metaheuristics::StrategyKind::kSeededGenetic;
  metaheuristics::StrategyConfig balancer;
  int balance_interval_ticks = 10;

  std::string output_dir = "out";
  std::string run_name = "run";
  int usage_dump_interval = 100;
  bool message_trace = false;
  int snapshot_interval = 0;  // ticks; 0 disables periodic snapshots
  int snapshot_keep = 3;
  std::optional<std::string> resume_from;

  // Seeds the engine and balancer configs from `seed`, then checks every
  // field. Throws ConfigError.
  void finalize();
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig FromFile(const std::string& path);
};

}  // namespace cellsim::harness

#endif  // CELLSIM_HARNESS_RUN_CONFIG_H_
