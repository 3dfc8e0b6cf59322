#include "cellsim/harness/simulation.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <thread>

#include "cellsim/common/errors.h"
#include "cellsim/common/rng.h"
#include "cellsim/harness/scale.h"
#include "cellsim/masb/scoring.h"
#include "cellsim/metaheuristics/fixture.h"
#include "cellsim/metaheuristics/problem.h"
#include "cellsim/workload/gcd_parser.h"
#include "cellsim/workload/synth.h"
#include "cellsim/workload/window.h"

namespace cellsim::harness {

namespace fs = std::filesystem;
namespace mh = metaheuristics;
using nlohmann::json;

namespace {

constexpr const char* kSnapshotFormat = "cellsim-snapshot";
constexpr SimTime kBeginning = std::numeric_limits<SimTime>::min();

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double Ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

}  // namespace

void WriteTickHeader(std::ostream& out) {
  out << "tick,idle,sta,ta,pa,da,overloaded,migrations_attempted,migrations_completed,"
         "collisions,cpu_used_ratio,mem_used_ratio,cpu_req_ratio,mem_req_ratio,stc_mb\n";
}

void WriteTickRow(std::ostream& out, const TickRecord& r) {
  out << r.tick << ',' << r.idle << ',' << r.sta << ',' << r.ta << ',' << r.pa << ',' << r.da
      << ',' << r.overloaded << ',' << r.migrations_attempted << ',' << r.migrations_completed
      << ',' << r.collisions << ',' << Fixed(r.cpu_used_ratio, 6) << ','
      << Fixed(r.mem_used_ratio, 6) << ',' << Fixed(r.cpu_req_ratio, 6) << ','
      << Fixed(r.mem_req_ratio, 6) << ',' << Fixed(r.stc_mb, 3) << '\n';
}

void WriteUsageDump(std::ostream& out, const workload::Cell& cell) {
  const auto& names = cell.catalog().names();
  out << "node,class,tasks";
  for (const auto& r : names) out << ',' << r << "_total," << r << "_used," << r << "_required";
  out << '\n';
  for (NodeIndex n = 0; n < cell.node_slots(); ++n) {
    const auto& node = cell.node(n);
    if (!node.online) continue;
    const auto cls = masb::classify_allocation(node.spec.total, cell.used_sum(n),
                                               cell.production_required_sum(n),
                                               !node.residents.empty());
    out << node.spec.id << ',' << masb::ToString(cls) << ',' << node.residents.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << ',' << Fixed(node.spec.total[i], 6) << ',' << Fixed(cell.used_sum(n)[i], 6) << ','
          << Fixed(cell.required_sum(n)[i], 6);
    }
    out << '\n';
  }
}

// ------------------------------------------------------------ Simulation

Simulation::Simulation(RunConfig cfg)
    : cfg_(std::move(cfg)),
      cell_(model::ResourceTypeCatalog::CpuMemory()),
      anomalies_(std::make_shared<workload::AnomalyLog>()) {
  cfg_.finalize();
  if (cfg_.fixture_dir) throw ConfigError("fixture runs do not use the tick loop");
  if (cfg_.mode == Mode::kMasb) engine_ = std::make_unique<masb::Engine>(cell_, cfg_.masb);
  open_sources();
}

Simulation::~Simulation() = default;

void Simulation::set_error_log(std::ostream* out) {
  errors_ = out;
  if (engine_) engine_->set_alert_log(out);
}

void Simulation::set_message_trace(std::ostream* out) {
  if (engine_) engine_->set_message_trace(out);
}

void Simulation::set_sample_log(std::ostream* out) {
  if (engine_) engine_->set_sample_log(out);
}

void Simulation::open_sources() {
  sources_.clear();
  std::vector<std::unique_ptr<workload::EventSource>> raw;
  if (cfg_.gcd_dir) {
    const auto schema = cfg_.gcd_schema_json.empty()
                            ? workload::TraceSchema::Default()
                            : workload::TraceSchema::FromJsonText(cfg_.gcd_schema_json);
    for (auto& p : workload::OpenTraceDirectory(*cfg_.gcd_dir, schema, anomalies_)) {
      raw.push_back(std::move(p));
    }
  } else if (cfg_.synth) {
    raw.push_back(std::make_unique<workload::SynthSource>(*cfg_.synth));
  }
  for (auto& s : raw) {
    std::unique_ptr<workload::EventSource> src = std::move(s);
    if (cfg_.prefetch) src = std::make_unique<workload::PrefetchSource>(std::move(src));
    if (cfg_.scale_factor > 1) src = std::make_unique<ScaledSource>(std::move(src), cfg_.scale_factor);
    sources_.push_back(std::move(src));
  }
}

bool Simulation::finished() const {
  return exhausted_ || (cfg_.max_ticks && tick_ >= *cfg_.max_ticks);
}

void Simulation::apply_batch(std::vector<workload::WorkloadEvent>& events) {
  const bool follow_trace = cfg_.mode != Mode::kMasb;
  for (auto& e : events) {
    if (e.is_node_event() && removed_nodes_.count(e.subject())) {
      ++totals_.events_ignored;
      continue;
    }
    const auto out = workload::apply_event(cell_, e);
    if (!out.applied) {
      ++totals_.events_ignored;
      continue;
    }
    ++totals_.events_applied;
    if (!follow_trace || e.kind() != workload::EventKind::kUpdateTaskUsedResources) continue;
    // Replay placement: the usage record names the host.
    const auto& u = std::get<workload::UpdateTaskUsedResources>(e.payload);
    if (!u.machine || out.task == kNoIndex) continue;
    const auto n = cell_.find_node(*u.machine);
    if (!n || !cell_.node(*n).online) continue;
    const NodeIndex cur = cell_.task(out.task).node;
    if (cur == kNoIndex) {
      cell_.place(out.task, *n);
    } else if (cur != *n) {
      cell_.move(out.task, *n);
    }
  }
}

TickRecord Simulation::record(std::int64_t tick) const {
  TickRecord r;
  r.tick = tick;
  const auto m = masb::asr_metrics(cell_);
  r.idle = m.count(masb::AllocationClass::kIdle);
  r.sta = m.count(masb::AllocationClass::kSta);
  r.ta = m.count(masb::AllocationClass::kTa);
  r.pa = m.count(masb::AllocationClass::kPa);
  r.da = m.count(masb::AllocationClass::kDa);
  r.overloaded = m.count(masb::AllocationClass::kOverloaded);
  double total[2] = {0, 0}, used[2] = {0, 0}, req[2] = {0, 0};
  for (NodeIndex n = 0; n < cell_.node_slots(); ++n) {
    if (!cell_.node(n).online) continue;
    for (std::size_t i = 0; i < 2 && i < cell_.dimension(); ++i) {
      total[i] += cell_.node(n).spec.total[i];
      used[i] += cell_.used_sum(n)[i];
      req[i] += cell_.required_sum(n)[i];
    }
  }
  r.cpu_used_ratio = Ratio(used[0], total[0]);
  r.mem_used_ratio = Ratio(used[1], total[1]);
  r.cpu_req_ratio = Ratio(req[0], total[0]);
  r.mem_req_ratio = Ratio(req[1], total[1]);
  return r;
}

void Simulation::balance(TickRecord& rec) {
  std::vector<model::NodeId> targets;
  for (NodeIndex n = 0; n < cell_.node_slots(); ++n) {
    if (cell_.node(n).online) targets.push_back(cell_.node(n).spec.id);
  }
  if (targets.empty()) return;
  const auto state = cell_.to_system_state();
  if (state.tasks().empty()) return;
  auto problem = mh::Problem::FromState(state, targets);
  mh::StrategyConfig bcfg = cfg_.balancer;
  bcfg.seed = DeriveSeed(*cfg_.seed, 0xba1 + static_cast<std::uint64_t>(tick_));
  mh::BalancerResult res;
  try {
    res = mh::run_strategy(cfg_.strategy, problem, bcfg);
  } catch (const InfeasibleError& e) {
    if (errors_) *errors_ << "ALERT tick=" << tick_ << " balancer: " << e.what() << "\n";
    return;
  }
  if (!res.stable || !res.best) {
    if (errors_) *errors_ << "ALERT tick=" << tick_ << " balancer found no stable assignment\n";
    return;
  }
  const auto target = res.best->assignment();
  for (const auto& [task_id, node_id] : target.map()) {
    if (state.assignment().at(task_id) == node_id) continue;
    const auto t = cell_.find_task(task_id);
    const auto n = cell_.find_node(node_id);
    if (!t || !n) continue;
    const auto& spec = cell_.task(*t).spec;
    ++rec.migrations_attempted;
    ++rec.migrations_completed;
    rec.stc_mb += spec.migration_cost_mb;
    migration_log_.push_back({tick_ * cfg_.tick_length, task_id,
                              cell_.node(cell_.task(*t).node).spec.id, node_id,
                              spec.migration_cost_mb, false});
    cell_.move(*t, *n);
  }
}

TickRecord Simulation::step() {
  const SimTime start = tick_ * cfg_.tick_length;
  std::vector<workload::EventSource*> ptrs;
  for (auto& s : sources_) ptrs.push_back(s.get());
  auto batch = workload::collect_window(ptrs, tick_ == 0 ? kBeginning : start,
                                        start + cfg_.tick_length, anomalies_.get());
  const bool end = batch.end_of_trace;
  auto filtered = workload::filter_anomalies(cell_, std::move(batch));
  totals_.anomaly_drops += filtered.dropped_tasks.size();
  for (auto& r : filtered.reports) anomalies_->add(std::move(r));
  apply_batch(filtered.batch.events);

  if (tick_ == 0 && cfg_.compaction > 0) {
    const auto c = compact_cell(cell_, cfg_.compaction, DeriveSeed(*cfg_.seed, 0xc0));
    removed_nodes_.insert(c.removed.begin(), c.removed.end());
    if (log_) {
      *log_ << "compaction removed " << c.removed.size() << " nodes, displaced "
            << c.displaced.size() << " tasks\n";
    }
  }

  TickRecord extra;
  if (engine_) {
    engine_->submit_pending();
    masb::TickStats st = engine_->run_tick(start);
    extra.migrations_attempted = st.migrations_attempted;
    extra.migrations_completed = st.migrations_completed;
    extra.collisions = st.collisions;
    extra.stc_mb = st.stc_mb;
    totals_.forced_migrations += st.forced_completed;
    migration_log_.insert(migration_log_.end(), st.migrations.begin(), st.migrations.end());
  } else if (cfg_.mode == Mode::kMetaheuristic &&
             (tick_ + 1) % cfg_.balance_interval_ticks == 0) {
    balance(extra);
  }
  TickRecord rec = record(tick_);
  rec.migrations_attempted = extra.migrations_attempted;
  rec.migrations_completed = extra.migrations_completed;
  rec.collisions = extra.collisions;
  rec.stc_mb = extra.stc_mb;
  totals_.migrations += rec.migrations_completed;
  totals_.stc_mb += rec.stc_mb;

  for (const auto& r : anomalies_->drain()) {
    if (errors_) *errors_ << workload::FormatAnomaly(r) << "\n";
  }
  exhausted_ = end;
  ++tick_;
  return rec;
}

json Simulation::snapshot() const {
  json j = {{"format", kSnapshotFormat},
            {"version", kSnapshotVersion},
            {"tick", tick_},
            {"exhausted", exhausted_},
            {"config", cfg_.to_json()},
            {"cell", cell_.to_json()},
            {"engine", engine_ ? engine_->to_json() : json(nullptr)},
            {"removed_nodes", removed_nodes_},
            {"totals",
             {{"events_applied", totals_.events_applied},
              {"events_ignored", totals_.events_ignored},
              {"anomaly_drops", totals_.anomaly_drops},
              {"migrations", totals_.migrations},
              {"forced_migrations", totals_.forced_migrations},
              {"stc_mb", totals_.stc_mb}}}};
  j["state_hash"] = SnapshotStateHash(j);
  return j;
}

void Simulation::restore(const json& j) {
  try {
    if (j.value("format", "") != kSnapshotFormat) throw TraceError("not a simulation snapshot");
    const int version = j.at("version").get<int>();
    if (version != kSnapshotVersion) {
      throw TraceError("snapshot version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kSnapshotVersion) + ")");
    }
    const auto& c = j.at("config");
    if (c.at("mode").get<std::string>() != ToString(cfg_.mode) || c.at("seed") != json(*cfg_.seed) ||
        c.at("scale_factor").get<int>() != cfg_.scale_factor) {
      throw TraceError("snapshot was taken with a different mode, seed or scale factor");
    }
    cell_ = workload::Cell::from_json(j.at("cell"));
    if (engine_) {
      if (j.at("engine").is_null()) throw TraceError("snapshot has no agent state");
      engine_->restore(j.at("engine"));
    }
    removed_nodes_ = j.at("removed_nodes").get<std::set<model::NodeId>>();
    const auto& t = j.at("totals");
    totals_.events_applied = t.at("events_applied");
    totals_.events_ignored = t.at("events_ignored");
    totals_.anomaly_drops = t.at("anomaly_drops");
    totals_.migrations = t.at("migrations");
    totals_.forced_migrations = t.at("forced_migrations");
    totals_.stc_mb = t.at("stc_mb");
    tick_ = j.at("tick").get<std::int64_t>();
    exhausted_ = j.at("exhausted").get<bool>();
  } catch (const json::exception& e) {
    throw TraceError(std::string("corrupt snapshot: ") + e.what());
  }
  migration_log_.clear();
  open_sources();
  if (tick_ > 0) {
    std::vector<workload::EventSource*> ptrs;
    for (auto& s : sources_) ptrs.push_back(s.get());
    workload::collect_window(ptrs, kBeginning, tick_ * cfg_.tick_length, nullptr);
  }
  anomalies_->drain();
}

int Simulation::run() {
  const fs::path out(cfg_.output_dir);
  std::error_code ec;
  fs::create_directories(out / "logs", ec);
  fs::create_directories(out / "usage", ec);
  if (cfg_.snapshot_interval > 0) fs::create_directories(out / "snapshots", ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg_.output_dir + ": " + ec.message());
  const std::string base = (out / "logs" / cfg_.run_name).string();
  std::ofstream log(base + ".log"), err(base + "-error.log"), ticks(base + "-ticks.csv");
  std::ofstream messages;
  if (!log || !err || !ticks) throw ConfigError("cannot open log files under " + cfg_.output_dir);
  if (cfg_.message_trace) {
    messages.open(base + "-messages.csv");
    messages << "time_us,kind,sender,recipient,correlation\n";
    set_message_trace(&messages);
  }
  set_log(&log);
  set_error_log(&err);
  set_sample_log(&log);
  log << "config " << cfg_.to_json().dump() << "\n";

  if (cfg_.resume_from) {
    restore(LoadSnapshot(*cfg_.resume_from));
    log << "resumed from " << *cfg_.resume_from << " at tick " << tick_ << "\n";
  }
  WriteTickHeader(ticks);
  const auto wall_start = std::chrono::steady_clock::now();
  std::string last_snapshot;
  try {
    while (!finished()) {
      const auto tick_wall = std::chrono::steady_clock::now();
      const TickRecord rec = step();
      WriteTickRow(ticks, rec);
      if (cfg_.usage_dump_interval > 0 && (rec.tick + 1) % cfg_.usage_dump_interval == 0) {
        std::ofstream dump(out / "usage" / (cfg_.run_name + "-" + std::to_string(rec.tick) + ".csv"));
        WriteUsageDump(dump, cell_);
      }
      if (cfg_.snapshot_interval > 0 && tick_ % cfg_.snapshot_interval == 0) {
        last_snapshot = SaveSnapshot(snapshot(), (out / "snapshots").string(), cfg_.run_name,
                                     tick_, cfg_.snapshot_keep);
      }
      if (cfg_.speed_factor > 0) {
        const auto budget = std::chrono::microseconds(
            static_cast<std::int64_t>(static_cast<double>(cfg_.tick_length) / cfg_.speed_factor));
        std::this_thread::sleep_until(tick_wall + budget);
      }
    }
  } catch (const TraceError& e) {
    err << "trace error at tick " << tick_ << ": " << e.what() << "\n";
    if (!last_snapshot.empty()) err << "last snapshot kept at " << last_snapshot << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    err << "infeasible workload at tick " << tick_ << ": " << e.what() << "\n";
    return 3;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  log << "finished ticks=" << tick_ << " migrations=" << totals_.migrations
      << " stc_mb=" << Fixed(totals_.stc_mb, 3) << " events=" << totals_.events_applied
      << " ignored=" << totals_.events_ignored << " anomaly_drops=" << totals_.anomaly_drops
      << " wall_s=" << Fixed(wall, 2) << "\n";
  if (engine_ && !engine_->safety().clean()) {
    err << "safety counters not clean\n";
  }
  return 0;
}

// ------------------------------------------------------------- snapshots

std::string SnapshotStateHash(const json& j) {
  const std::string body = j.at("cell").dump() + j.at("engine").dump() + std::to_string(j.at("tick").get<std::int64_t>());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(StableHash(body)));
  return buf;
}

std::string SaveSnapshot(const json& j, const std::string& dir, const std::string& run,
                         std::int64_t tick, int keep) {
  char name[64];
  std::snprintf(name, sizeof name, "-%08lld.snapshot.json", static_cast<long long>(tick));
  const fs::path path = fs::path(dir) / (run + name);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw TraceError("cannot write snapshot " + tmp.string());
    out << j.dump();
    if (!out) throw TraceError("short write on snapshot " + tmp.string());
  }
  fs::rename(tmp, path);
  std::vector<fs::path> mine;
  const std::string prefix = run + "-";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string f = e.path().filename().string();
    if (f.rfind(prefix, 0) == 0 && f.size() > prefix.size() + 14 &&
        f.compare(f.size() - 14, 14, ".snapshot.json") == 0) {
      mine.push_back(e.path());
    }
  }
  std::sort(mine.begin(), mine.end());
  for (std::size_t i = 0; i + static_cast<std::size_t>(keep) < mine.size(); ++i) fs::remove(mine[i]);
  return path.string();
}

json LoadSnapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open snapshot " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw TraceError("corrupt snapshot " + path + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kSnapshotFormat) {
    throw TraceError(path + " is not a simulation snapshot");
  }
  const int version = j.value("version", -1);
  if (version != kSnapshotVersion) {
    throw TraceError("snapshot " + path + " has version " + std::to_string(version) +
                     ", expected " + std::to_string(kSnapshotVersion));
  }
  try {
    if (SnapshotStateHash(j) != j.at("state_hash").get<std::string>()) {
      throw TraceError("snapshot " + path + " fails its integrity check");
    }
  } catch (const json::exception& e) {
    throw TraceError("corrupt snapshot " + path + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------- fixture

int RunFixture(const RunConfig& cfg_in, std::ostream& csv, std::ostream* log) {
  RunConfig cfg = cfg_in;
  cfg.finalize();
  if (!cfg.fixture_dir) throw ConfigError("no fixture directory given");
  const auto fixture = mh::BalancerFixture::Load(*cfg.fixture_dir);
  const auto& scenario = fixture.scenario(cfg.scenario);
  auto problem = fixture.problem_for(scenario);
  mh::StrategyConfig bcfg = cfg.balancer;
  bcfg.seed = cfg.seed;
  mh::WriteBenchHeader(csv);
  try {
    const auto r = mh::run_strategy(cfg.strategy, problem, bcfg);
    mh::WriteBenchRow(csv, scenario.name, cfg.strategy, *cfg.seed, r);
    if (log) {
      *log << "scenario " << scenario.name << " strategy " << mh::StrategyName(cfg.strategy)
           << " stable=" << r.stable;
      if (r.best) *log << " stc=" << r.best->stc() << " moved=" << r.best->moved();
      *log << "\n";
    }
    return r.stable ? 0 : 3;
  } catch (const InfeasibleError& e) {
    if (log) *log << "infeasible: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cellsim::harness
