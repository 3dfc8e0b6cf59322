#include "cellsim/harness/run_config.h"

#include <fstream>
#include <sstream>

#include "cellsim/common/errors.h"
#include "cellsim/common/rng.h"

namespace cellsim::harness {

using nlohmann::json;
namespace mh = metaheuristics;

const char* ToString(Mode m) {
  switch (m) {
    case Mode::kReplay: return "replay";
    case Mode::kMasb: return "masb";
    case Mode::kMetaheuristic: return "metaheuristic";
  }
  return "?";
}

Mode ParseMode(const std::string& s) {
  if (s == "replay") return Mode::kReplay;
  if (s == "masb") return Mode::kMasb;
  if (s == "metaheuristic") return Mode::kMetaheuristic;
  throw ConfigError("unknown mode '" + s + "' (expected replay, masb or metaheuristic)");
}

namespace {

json BalancerJson(const mh::StrategyConfig& c) {
  json j = {{"random_solution_loops", c.random_solution_loops},
            {"tabu_dull_move_limit", c.tabu_dull_move_limit},
            {"sa_cooling", c.sa_cooling},
            {"sa_min_temperature_ratio", c.sa_min_temperature_ratio},
            {"sa_t0_samples", c.sa_t0_samples},
            {"ga_population", c.ga_population},
            {"ga_mutation_rate", c.ga_mutation_rate},
            {"ga_elite", c.ga_elite},
            {"ga_tournament", c.ga_tournament},
            {"ga_drift", c.ga_drift},
            {"sga_pool_fraction", c.sga_pool_fraction},
            {"sga_reseed_interval", c.sga_reseed_interval},
            {"full_scan_leaf_cap", c.full_scan_leaf_cap},
            {"use_cache", c.use_cache},
            {"cache_capacity", c.cache_capacity}};
  j["time_budget_s"] = c.time_budget_s ? json(*c.time_budget_s) : json(nullptr);
  j["candidate_budget"] = c.candidate_budget ? json(*c.candidate_budget) : json(nullptr);
  j["max_runs"] = c.max_runs ? json(*c.max_runs) : json(nullptr);
  json seeders = json::array();
  for (auto k : c.sga_seeders) seeders.push_back(mh::StrategyName(k));
  j["sga_seeders"] = seeders;
  return j;
}

template <typename T>
void Opt(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<T>();
  }
}

mh::StrategyConfig BalancerFromJson(const json& j, mh::StrategyConfig c) {
  Opt(j, "time_budget_s", c.time_budget_s);
  Opt(j, "candidate_budget", c.candidate_budget);
  Opt(j, "max_runs", c.max_runs);
  c.random_solution_loops = j.value("random_solution_loops", c.random_solution_loops);
  c.tabu_dull_move_limit = j.value("tabu_dull_move_limit", c.tabu_dull_move_limit);
  c.sa_cooling = j.value("sa_cooling", c.sa_cooling);
  c.sa_min_temperature_ratio = j.value("sa_min_temperature_ratio", c.sa_min_temperature_ratio);
  c.sa_t0_samples = j.value("sa_t0_samples", c.sa_t0_samples);
  c.ga_population = j.value("ga_population", c.ga_population);
  c.ga_mutation_rate = j.value("ga_mutation_rate", c.ga_mutation_rate);
  c.ga_elite = j.value("ga_elite", c.ga_elite);
  c.ga_tournament = j.value("ga_tournament", c.ga_tournament);
  c.ga_drift = j.value("ga_drift", c.ga_drift);
  c.sga_pool_fraction = j.value("sga_pool_fraction", c.sga_pool_fraction);
  c.sga_reseed_interval = j.value("sga_reseed_interval", c.sga_reseed_interval);
  c.full_scan_leaf_cap = j.value("full_scan_leaf_cap", c.full_scan_leaf_cap);
  c.use_cache = j.value("use_cache", c.use_cache);
  c.cache_capacity = j.value("cache_capacity", c.cache_capacity);
  if (j.contains("sga_seeders")) {
    c.sga_seeders.clear();
    for (const auto& s : j.at("sga_seeders")) c.sga_seeders.push_back(mh::ParseStrategy(s.get<std::string>()));
  }
  return c;
}

}  // namespace

void RunConfig::finalize() {
  if (!seed) throw ConfigError("a seed is required (--seed)");
  masb.seed = *seed;
  masb.tick_length = tick_length;  // agent rounds subdivide the harness tick
  balancer.seed = DeriveSeed(*seed, 0xba1);
  validate();
}

void RunConfig::validate() const {
  if (!seed) throw ConfigError("a seed is required (--seed)");
  const int sources = (gcd_dir ? 1 : 0) + (synth ? 1 : 0) + (fixture_dir ? 1 : 0);
  if (sources != 1) {
    throw ConfigError("exactly one trace source is required (gcd directory, synthetic config or fixture)");
  }
  if (fixture_dir && mode != Mode::kMetaheuristic) {
    throw ConfigError("a balancer fixture can only be run in metaheuristic mode");
  }
  if (tick_length <= 0) throw ConfigError("tick length must be positive");
  if (!(speed_factor >= 0)) throw ConfigError("speed factor must be >= 0");
  if (max_ticks && *max_ticks < 0) throw ConfigError("tick limit must be >= 0");
  if (scale_factor != 1 && scale_factor != 2 && scale_factor != 4 && scale_factor != 8) {
    throw ConfigError("scale factor must be 1, 2, 4 or 8");
  }
  if (!(compaction >= 0 && compaction < 1)) throw ConfigError("compaction fraction must lie in [0,1)");
  if (balance_interval_ticks < 1) throw ConfigError("balance interval must be >= 1 tick");
  if (usage_dump_interval < 0) throw ConfigError("usage dump interval must be >= 0");
  if (snapshot_interval < 0) throw ConfigError("snapshot interval must be >= 0");
  if (snapshot_keep < 1) throw ConfigError("snapshot retention must be >= 1");
  if (run_name.empty() || run_name.find('/') != std::string::npos) {
    throw ConfigError("run name must be non-empty and contain no '/'");
  }
  if (synth) synth->validate();
  masb::EngineConfig m = masb;
  m.seed = *seed;
  m.validate();
  mh::StrategyConfig b = balancer;
  b.seed = seed;
  b.validate();
}

json RunConfig::to_json() const {
  json j = {{"mode", ToString(mode)},
            {"tick_length_s", static_cast<double>(tick_length) / 1e6},
            {"speed_factor", speed_factor},
            {"scale_factor", scale_factor},
            {"compaction", compaction},
            {"prefetch", prefetch},
            {"masb", masb.to_json()},
            {"strategy", mh::StrategyName(strategy)},
            {"balancer", BalancerJson(balancer)},
            {"balance_interval_ticks", balance_interval_ticks},
            {"output_dir", output_dir},
            {"run_name", run_name},
            {"usage_dump_interval", usage_dump_interval},
            {"message_trace", message_trace},
            {"snapshot_interval", snapshot_interval},
            {"snapshot_keep", snapshot_keep},
            {"scenario", scenario}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["max_ticks"] = max_ticks ? json(*max_ticks) : json(nullptr);
  if (gcd_dir) j["gcd_dir"] = *gcd_dir;
  if (!gcd_schema_json.empty()) j["gcd_schema"] = json::parse(gcd_schema_json);
  if (synth) j["synth"] = synth->to_json();
  if (fixture_dir) j["fixture_dir"] = *fixture_dir;
  if (resume_from) j["resume_from"] = *resume_from;
  return j;
}

RunConfig RunConfig::FromJson(const json& j) {
  RunConfig c;
  try {
    if (j.contains("mode")) c.mode = ParseMode(j.at("mode").get<std::string>());
    Opt(j, "gcd_dir", c.gcd_dir);
    if (j.contains("gcd_schema")) c.gcd_schema_json = j.at("gcd_schema").dump();
    if (j.contains("synth") && !j.at("synth").is_null()) c.synth = workload::SynthConfig::FromJson(j.at("synth"));
    Opt(j, "fixture_dir", c.fixture_dir);
    c.scenario = j.value("scenario", c.scenario);
    Opt(j, "seed", c.seed);
    if (j.contains("tick_length_s")) {
      c.tick_length = static_cast<SimTime>(j.at("tick_length_s").get<double>() * 1e6 + 0.5);
    }
    c.speed_factor = j.value("speed_factor", c.speed_factor);
    Opt(j, "max_ticks", c.max_ticks);
    c.scale_factor = j.value("scale_factor", c.scale_factor);
    c.compaction = j.value("compaction", c.compaction);
    c.prefetch = j.value("prefetch", c.prefetch);
    if (j.contains("masb")) c.masb = masb::EngineConfig::FromJson(j.at("masb"), c.masb);
    if (j.contains("strategy")) c.strategy = mh::ParseStrategy(j.at("strategy").get<std::string>());
    if (j.contains("balancer")) c.balancer = BalancerFromJson(j.at("balancer"), c.balancer);
    c.balance_interval_ticks = j.value("balance_interval_ticks", c.balance_interval_ticks);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.run_name = j.value("run_name", c.run_name);
    c.usage_dump_interval = j.value("usage_dump_interval", c.usage_dump_interval);
    c.message_trace = j.value("message_trace", c.message_trace);
    c.snapshot_interval = j.value("snapshot_interval", c.snapshot_interval);
    c.snapshot_keep = j.value("snapshot_keep", c.snapshot_keep);
    Opt(j, "resume_from", c.resume_from);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return FromJson(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

}  // namespace cellsim::harness
