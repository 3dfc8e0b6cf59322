#ifndef CELLSIM_MASB_ENGINE_H_
#define CELLSIM_MASB_ENGINE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cellsim/common/rng.h"
#include "cellsim/common/sim_time.h"
#include "cellsim/masb/messages.h"
#include "cellsim/masb/scoring.h"
#include "cellsim/masb/scs.h"
#include "cellsim/workload/cell.h"
#include "cellsim/workload/state_store.h"

namespace cellsim::masb {

struct EngineConfig {
  std::uint64_t seed = 0;
  int rounds_per_tick = 6;
  SimTime tick_length = Minutes(1);
  int broker_count = 1;
  std::size_t recommendation_count = 15;
  std::size_t initial_scan_limit = 200;
  std::size_t realloc_scan_limit = 2000;
  SimTime acceptance_wait = Seconds(30);
  SimTime recommendation_ttl = Minutes(3);
  SimTime cache_ttl = Minutes(5);
  SimTime unschedulable_backoff = Minutes(5);
  double forced_fitness = 1e-12;
  ScorerKind initial_scorer = ScorerKind::kSiasGain;
  ScorerKind realloc_scorer = ScorerKind::kSras;
  ScoringParams sias = ScoringParams::Sias();
  ScoringParams sras = ScoringParams::Sras();
  ScsConfig scs;
  double scs_sample_rate = 1.0 / 50;
  double quote_sample_rate = 1.0 / 5000;
  double target_sample_rate = 1.0 / 5000;

  void validate() const;  // throws ConfigError
  SimTime round_length() const { return tick_length / rounds_per_tick; }
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static EngineConfig FromJson(const nlohmann::json& j, EngineConfig base);
  static EngineConfig FromJson(const nlohmann::json& j);
};

struct SafetyCounters {
  std::uint64_t nonforced_completions = 0;
  std::uint64_t forced_completions = 0;
  std::uint64_t unstable_after_nonforced = 0;
  std::uint64_t rus_violations_after_nonforced = 0;
  std::uint64_t forced_constraint_violations = 0;
  std::uint64_t forced_capacity_violations = 0;
  std::uint64_t expired_recommendations_used = 0;
  std::uint64_t cancelled_completions = 0;

  bool clean() const {
    return unstable_after_nonforced == 0 && rus_violations_after_nonforced == 0 &&
           forced_constraint_violations == 0 && forced_capacity_violations == 0 &&
           expired_recommendations_used == 0;
  }
};

struct MigrationRecord {
  SimTime at = 0;
  model::TaskId task;
  model::NodeId from;
  model::NodeId to;
  double cost_mb = 0.0;
  bool forced = false;
};

struct TickStats {
  std::uint64_t migrations_attempted = 0;
  std::uint64_t migrations_completed = 0;
  std::uint64_t forced_completed = 0;
  std::uint64_t collisions = 0;
  std::uint64_t initial_attempts = 0;
  std::uint64_t initial_placements = 0;
  std::uint64_t unschedulable = 0;
  std::uint64_t scs_runs = 0;
  std::uint64_t messages = 0;
  double stc_mb = 0.0;
  std::vector<MigrationRecord> migrations;
};

// Admission footprint: declared requirements until the first usage report.
const model::ResourceVector& placement_demand(const model::TaskSpec& t);
// Sum of placement_demand over the node's residents.
model::ResourceVector node_load(const workload::Cell& cell, NodeIndex n);

double ScoreWith(ScorerKind k, const EngineConfig& cfg, const model::ResourceVector& total,
                 const model::ResourceVector& before, const model::ResourceVector& after);

// Random sampling of decision records into a log stream.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed = 0) : rng_(seed) {}
  bool take(double rate) { return out_ && rate > 0 && rng_.uniform() < rate; }
  std::ostream* out() const { return out_; }
  void set_out(std::ostream* o) { out_ = o; }
  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  std::ostream* out_ = nullptr;
};

struct Completion {
  TaskIndex task = kNoIndex;
  model::TaskId id;
  NodeIndex source = kNoIndex;  // none for initial placement
  NodeIndex target = kNoIndex;
  bool forced = false;
  SimTime recommended_at = 0;
};

// Everything an agent may touch while handling one round.
struct RoundContext {
  const workload::Cell& cell;
  const EngineConfig& cfg;
  SimTime now;
  std::vector<Message>& outbox;
  std::uint64_t& next_correlation;
  TickStats& stats;
  SafetyCounters& safety;
  std::vector<Completion>& completions;
  std::vector<std::pair<TaskIndex, model::TaskId>>& released;
  Sampler& sampler;
  std::ostream* alerts;

  std::uint64_t correlation() { return ++next_correlation; }
  void send(Message m) {
    m.sent_at = now;
    outbox.push_back(std::move(m));
  }
  void alert(const std::string& text);
};

struct QuoteResult {
  std::vector<CandidateNodeRecommendation> recommendations;
  bool unschedulable = false;
  std::size_t matched = 0;
};

class Broker {
 public:
  Broker(std::uint32_t index, std::uint64_t seed);

  void handle(const Message& m, RoundContext& ctx);

  // Scores up to the scan limit of constraint-matching cached nodes, draws
  // the recommendation list by score-weighted sampling and pads it with
  // zero-fitness nodes that still fit, then forced entries.
  QuoteResult get_candidate_nodes(const model::TaskSpec& task, NodeIndex source, bool initial,
                                  RoundContext& ctx);

  void update(const BrokerCacheEntry& e);
  void evict_stale(SimTime now, SimTime ttl);
  std::vector<BrokerCacheEntry> entries() const;  // directory order
  std::optional<BrokerCacheEntry> entry(NodeIndex n) const { return cache_.get(n); }
  std::size_t cache_size() const { return keys_.size(); }
  std::uint32_t index() const { return index_; }

  nlohmann::json to_json() const;
  void restore(const nlohmann::json& j);

 private:
  struct InitialFlow {
    TaskIndex task = kNoIndex;
    std::shared_ptr<const model::TaskSpec> spec;
    std::vector<CandidateNodeRecommendation> recs;
    std::size_t next = 0;
  };
  void start_initial(const Message& m, RoundContext& ctx);
  void try_next(std::uint64_t key, RoundContext& ctx);
  void erase_key(NodeIndex n);

  std::uint32_t index_;
  Rng rng_;
  workload::StateStore<NodeIndex, BrokerCacheEntry> cache_;
  std::vector<NodeIndex> keys_;
  std::unordered_map<NodeIndex, std::size_t> pos_;
  std::map<std::uint64_t, InitialFlow> initial_;  // keyed by submission correlation
  std::map<std::uint64_t, std::uint64_t> pending_;  // process-request correlation -> flow
  std::set<model::TaskId> alerted_;
};

struct SanFlow {
  enum class Stage { kCandidates, kAcceptance, kProcess };
  TaskIndex task = kNoIndex;
  model::TaskId id;
  Stage stage = Stage::kCandidates;
  std::uint64_t correlation = 0;
  SimTime started = 0;
  SimTime deadline = 0;
  std::vector<CandidateNodeRecommendation> recs;
  std::vector<std::pair<std::size_t, NodeStats>> accepted;  // rec index, fresh stats
  std::size_t awaiting = 0;
  std::vector<NodeIndex> tried;
  std::size_t target = 0;  // rec index of the current process request
};

struct Reservation {
  TaskIndex task = kNoIndex;
  model::TaskId id;
  model::ResourceVector demand;
  model::ResourceVector production;
  bool forced = false;
};

class NodeAgent {
 public:
  NodeAgent() = default;
  NodeAgent(NodeIndex node, std::uint64_t seed);

  void handle(const Message& m, RoundContext& ctx, int broker_count);
  // Per-round work: expire flows, pick targets, launch SCS. Returns false
  // when the agent has nothing left to do.
  bool activity(RoundContext& ctx, int broker_count);

  // Step 3 admission test; fills `stats` with the fresh view.
  bool handle_migration_request(const model::TaskSpec& task, const workload::Cell& cell,
                                NodeStats* stats) const;
  // Step 5 final check; on success reserves resources and queues completion.
  bool handle_process_request(const Message& m, RoundContext& ctx);
  // Step 4 choice among accepted, zero-score accepted, then forced entries.
  std::optional<std::size_t> select_target(SanFlow& f, RoundContext& ctx);

  NodeStats stats(const workload::Cell& cell) const;
  bool needs_attention(const workload::Cell& cell) const;
  void release_reservation(TaskIndex t, const model::TaskId& id);
  void reset();
  std::shared_ptr<const model::AttributeMap> attributes(const workload::Cell& cell);

  NodeIndex node() const { return node_; }
  const std::map<TaskIndex, SanFlow>& flows() const { return flows_; }
  const std::vector<Reservation>& incoming() const { return incoming_; }

  nlohmann::json to_json() const;
  void restore(const nlohmann::json& j);

 private:
  void run_scs(RoundContext& ctx, int broker_count);
  void step4(SanFlow& f, RoundContext& ctx);
  SanFlow* find_flow(std::uint64_t corr, SanFlow::Stage stage, const workload::Cell& cell);
  bool admits(const model::TaskSpec& task, const workload::Cell& cell) const;

  NodeIndex node_ = kNoIndex;
  Rng rng_;
  std::vector<Reservation> incoming_;
  std::map<TaskIndex, SanFlow> flows_;
  std::map<model::TaskId, SimTime> backoff_;
  std::shared_ptr<const model::AttributeMap> attrs_;
};

// Deterministic round-based scheduler for all agents of one cell. Messages
// sent in a round are delivered in the next; brokers read their inbox
// before node agents, and forced process requests are handled last.
class Engine {
 public:
  Engine(workload::Cell& cell, EngineConfig cfg);

  // Queues initial-allocation requests for tasks not already in flight.
  void submit(const std::vector<TaskIndex>& tasks);
  void submit_pending();

  TickStats run_tick(SimTime tick_start);

  void set_message_trace(std::ostream* out) { trace_ = out; }
  void set_sample_log(std::ostream* out) { sampler_.set_out(out); }
  void set_alert_log(std::ostream* out) { alerts_ = out; }
  // Called after every applied completion with the round time.
  using CompletionObserver =
      std::function<void(const Completion&, const workload::Cell&, SimTime now)>;
  void set_completion_observer(CompletionObserver fn) { observer_ = std::move(fn); }

  const SafetyCounters& safety() const { return safety_; }
  const EngineConfig& config() const { return cfg_; }
  const NodeAgent* agent(NodeIndex n) const;
  const Broker& broker(std::size_t i) const { return *brokers_[i]; }
  std::size_t in_flight_submissions() const { return submitted_.size(); }
  // Sum of incoming reservations over all agents.
  std::size_t reservation_count() const;

  nlohmann::json to_json() const;
  void restore(const nlohmann::json& j);

 private:
  void sync_agents();
  void deliver(std::vector<Message>& inbox, RoundContext& ctx);
  void apply_completions(std::vector<Completion>& completions, TickStats& stats, SimTime now);
  void send_status(NodeIndex n, SimTime now, std::vector<Message>& out);
  void trace(const std::vector<Message>& msgs);

  workload::Cell& cell_;
  EngineConfig cfg_;
  Rng rng_;
  Sampler sampler_;
  std::vector<std::unique_ptr<Broker>> brokers_;
  std::vector<NodeAgent> agents_;
  std::set<NodeIndex> active_;
  std::vector<Message> queue_;
  std::map<TaskIndex, model::TaskId> submitted_;
  std::uint64_t next_correlation_ = 0;
  SafetyCounters safety_;
  std::ostream* trace_ = nullptr;
  std::ostream* alerts_ = nullptr;
  CompletionObserver observer_;
};

}  // namespace cellsim::masb

#endif  // CELLSIM_MASB_ENGINE_H_
