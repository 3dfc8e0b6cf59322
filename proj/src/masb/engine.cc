#include "cellsim/masb/engine.h"

#include <algorithm>

#include "cellsim/common/errors.h"
#include "cellsim/workload/constraints.h"

namespace cellsim::masb {

using nlohmann::json;

namespace {

json ParamsJson(const ScoringParams& p) {
  return {{"bias", p.bias}, {"steep", p.steep}, {"floor", p.floor}};
}

ScoringParams ParamsFromJson(const json& j, ScoringParams p) {
  p.bias = j.value("bias", p.bias);
  p.steep = j.value("steep", p.steep);
  p.floor = j.value("floor", p.floor);
  return p;
}

double SecondsOf(SimTime t) { return static_cast<double>(t) / 1e6; }
SimTime FromSeconds(double s) { return static_cast<SimTime>(s * 1e6 + (s >= 0 ? 0.5 : -0.5)); }

}  // namespace

void EngineConfig::validate() const {
  if (rounds_per_tick < 1) throw ConfigError("masb.rounds_per_tick must be >= 1");
  if (tick_length <= 0) throw ConfigError("masb.tick_length_s must be positive");
  if (tick_length / rounds_per_tick <= 0) throw ConfigError("masb round length rounds to zero");
  if (broker_count < 1) throw ConfigError("masb.broker_count must be >= 1");
  if (recommendation_count < 1) throw ConfigError("masb.recommendation_count must be >= 1");
  if (initial_scan_limit < 1 || realloc_scan_limit < 1) {
    throw ConfigError("masb scan limits must be >= 1");
  }
  if (acceptance_wait < 0 || recommendation_ttl <= 0 || cache_ttl <= 0 ||
      unschedulable_backoff < 0) {
    throw ConfigError("masb timeouts must be non-negative (ttl positive)");
  }
  if (!(forced_fitness > 0)) throw ConfigError("masb.forced_fitness must be positive");
  for (double r : {scs_sample_rate, quote_sample_rate, target_sample_rate}) {
    if (!(r >= 0 && r <= 1)) throw ConfigError("masb sample rates must lie in [0,1]");
  }
  sias.validate();
  sras.validate();
  scs.validate();
}

json EngineConfig::to_json() const {
  return {{"seed", seed},
          {"rounds_per_tick", rounds_per_tick},
          {"tick_length_s", SecondsOf(tick_length)},
          {"broker_count", broker_count},
          {"recommendation_count", recommendation_count},
          {"initial_scan_limit", initial_scan_limit},
          {"realloc_scan_limit", realloc_scan_limit},
          {"acceptance_wait_s", SecondsOf(acceptance_wait)},
          {"recommendation_ttl_s", SecondsOf(recommendation_ttl)},
          {"cache_ttl_s", SecondsOf(cache_ttl)},
          {"unschedulable_backoff_s", SecondsOf(unschedulable_backoff)},
          {"forced_fitness", forced_fitness},
          {"initial_scorer", ToString(initial_scorer)},
          {"realloc_scorer", ToString(realloc_scorer)},
          {"sias", ParamsJson(sias)},
          {"sras", ParamsJson(sras)},
          {"scs", {{"restarts", scs.restarts}, {"depth", scs.depth}, {"stall_steps", scs.stall_steps}}},
          {"scs_sample_rate", scs_sample_rate},
          {"quote_sample_rate", quote_sample_rate},
          {"target_sample_rate", target_sample_rate}};
}

EngineConfig EngineConfig::FromJson(const json& j, EngineConfig c) {
  try {
    c.seed = j.value("seed", c.seed);
    c.rounds_per_tick = j.value("rounds_per_tick", c.rounds_per_tick);
    if (j.contains("tick_length_s")) c.tick_length = FromSeconds(j.at("tick_length_s").get<double>());
    c.broker_count = j.value("broker_count", c.broker_count);
    c.recommendation_count = j.value("recommendation_count", c.recommendation_count);
    c.initial_scan_limit = j.value("initial_scan_limit", c.initial_scan_limit);
    c.realloc_scan_limit = j.value("realloc_scan_limit", c.realloc_scan_limit);
    auto dur = [&](const char* key, SimTime& out) {
      if (j.contains(key)) out = FromSeconds(j.at(key).get<double>());
    };
    dur("acceptance_wait_s", c.acceptance_wait);
    dur("recommendation_ttl_s", c.recommendation_ttl);
    dur("cache_ttl_s", c.cache_ttl);
    dur("unschedulable_backoff_s", c.unschedulable_backoff);
    c.forced_fitness = j.value("forced_fitness", c.forced_fitness);
    if (j.contains("initial_scorer")) c.initial_scorer = ParseScorer(j.at("initial_scorer").get<std::string>());
    if (j.contains("realloc_scorer")) c.realloc_scorer = ParseScorer(j.at("realloc_scorer").get<std::string>());
    if (j.contains("sias")) c.sias = ParamsFromJson(j.at("sias"), c.sias);
    if (j.contains("sras")) c.sras = ParamsFromJson(j.at("sras"), c.sras);
    if (j.contains("scs")) {
      const auto& s = j.at("scs");
      c.scs.restarts = s.value("restarts", c.scs.restarts);
      c.scs.depth = s.value("depth", c.scs.depth);
      c.scs.stall_steps = s.value("stall_steps", c.scs.stall_steps);
    }
    c.scs_sample_rate = j.value("scs_sample_rate", c.scs_sample_rate);
    c.quote_sample_rate = j.value("quote_sample_rate", c.quote_sample_rate);
    c.target_sample_rate = j.value("target_sample_rate", c.target_sample_rate);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("masb config: ") + e.what());
  }
  c.validate();
  return c;
}

EngineConfig EngineConfig::FromJson(const json& j) { return FromJson(j, EngineConfig()); }

// ---------------------------------------------------------------- Engine

Engine::Engine(workload::Cell& cell, EngineConfig cfg)
    : cell_(cell), cfg_(std::move(cfg)), rng_(DeriveSeed(cfg_.seed, 0xe17)),
      sampler_(DeriveSeed(cfg_.seed, 0x5a)) {
  cfg_.validate();
  for (int b = 0; b < cfg_.broker_count; ++b) {
    brokers_.push_back(std::make_unique<Broker>(b, DeriveSeed(cfg_.seed, 0xb0 + b)));
  }
  sync_agents();
  // Agents starting on an existing cell check their node once.
  for (NodeIndex n = 0; n < cell_.node_slots(); ++n) {
    if (cell_.node(n).online) active_.insert(n);
  }
}

void Engine::sync_agents() {
  while (agents_.size() < cell_.node_slots()) {
    const NodeIndex n = static_cast<NodeIndex>(agents_.size());
    agents_.emplace_back(n, DeriveSeed(cfg_.seed, StableHash(cell_.node(n).spec.id)));
  }
}

const NodeAgent* Engine::agent(NodeIndex n) const {
  return n < agents_.size() ? &agents_[n] : nullptr;
}

std::size_t Engine::reservation_count() const {
  std::size_t n = 0;
  for (const auto& a : agents_) n += a.incoming().size();
  return n;
}

void Engine::submit(const std::vector<TaskIndex>& tasks) {
  for (TaskIndex t : tasks) {
    if (t >= cell_.task_slots()) continue;
    const auto& task = cell_.task(t);
    if (!task.alive || task.node != kNoIndex) continue;
    auto it = submitted_.find(t);
    if (it != submitted_.end() && it->second == task.spec.id) continue;
    Message m;
    m.kind = MessageKind::kSubmitTask;
    m.sender = AgentRef::Harness();
    m.recipient = AgentRef::Broker(static_cast<std::uint32_t>(rng_.below(brokers_.size())));
    m.correlation = ++next_correlation_;
    m.task = t;
    m.task_spec = std::make_shared<const model::TaskSpec>(task.spec);
    submitted_[t] = task.spec.id;
    queue_.push_back(std::move(m));
  }
}

void Engine::submit_pending() {
  submit(std::vector<TaskIndex>(cell_.pending().begin(), cell_.pending().end()));
}

void Engine::send_status(NodeIndex n, SimTime now, std::vector<Message>& out) {
  Message m;
  m.kind = MessageKind::kNodeStatusReport;
  m.sender = AgentRef::Node(n);
  m.recipient = AgentRef::Broker(static_cast<std::uint32_t>(n % brokers_.size()));
  m.sent_at = now;
  m.stats = agents_[n].stats(cell_);
  m.attributes = agents_[n].attributes(cell_);
  out.push_back(std::move(m));
}

void Engine::trace(const std::vector<Message>& msgs) {
  if (!trace_) return;
  auto ref = [&](const AgentRef& a) -> std::string {
    switch (a.kind) {
      case AgentRef::Kind::kNode:
        return "node:" + (a.index < cell_.node_slots() ? cell_.node(a.index).spec.id
                                                       : std::to_string(a.index));
      case AgentRef::Kind::kBroker: return "broker:" + std::to_string(a.index);
      case AgentRef::Kind::kHarness: return "harness";
    }
    return "?";
  };
  for (const auto& m : msgs) {
    *trace_ << m.sent_at << ',' << ToString(m.kind) << ',' << ref(m.sender) << ','
            << ref(m.recipient) << ',' << m.correlation << '\n';
  }
}

void Engine::deliver(std::vector<Message>& inbox, RoundContext& ctx) {
  const int nb = static_cast<int>(brokers_.size());
  auto forced_process = [](const Message& m) {
    return m.kind == MessageKind::kTaskMigrationProcessRequest && m.forced;
  };
  for (const auto& m : inbox) {
    if (m.recipient.kind == AgentRef::Kind::kBroker) brokers_[m.recipient.index]->handle(m, ctx);
  }
  for (const auto& m : inbox) {
    if (m.recipient.kind == AgentRef::Kind::kNode && !forced_process(m)) {
      agents_[m.recipient.index].handle(m, ctx, nb);
    }
  }
  for (const auto& m : inbox) {
    if (m.recipient.kind == AgentRef::Kind::kNode && forced_process(m)) {
      agents_[m.recipient.index].handle(m, ctx, nb);
    }
  }
}

void Engine::apply_completions(std::vector<Completion>& completions, TickStats& stats,
                               SimTime now) {
  std::stable_partition(completions.begin(), completions.end(),
                        [](const Completion& c) { return !c.forced; });
  for (const auto& c : completions) {
    agents_[c.target].release_reservation(c.task, c.id);
    const bool valid = c.task < cell_.task_slots() && cell_.task(c.task).alive &&
                       cell_.task(c.task).spec.id == c.id &&
                       cell_.task(c.task).node == c.source && cell_.node(c.target).online;
    if (!valid) {
      ++safety_.cancelled_completions;
      continue;
    }
    const auto& task = cell_.task(c.task);
    if (c.source == kNoIndex) {
      cell_.place(c.task, c.target);
      ++stats.initial_placements;
    } else {
      cell_.move(c.task, c.target);
      ++stats.migrations_completed;
      if (c.forced) ++stats.forced_completed;
      stats.stc_mb += task.spec.migration_cost_mb;
      stats.migrations.push_back({now, task.spec.id, cell_.node(c.source).spec.id,
                                  cell_.node(c.target).spec.id, task.spec.migration_cost_mb,
                                  c.forced});
    }
    const auto& node = cell_.node(c.target);
    if (!c.forced) {
      ++safety_.nonforced_completions;
      if (!cell_.used_sum(c.target).all_le(node.spec.total)) ++safety_.unstable_after_nonforced;
      if (!rus_fits(node.spec.total, cell_.production_required_sum(c.target))) {
        ++safety_.rus_violations_after_nonforced;
      }
    } else {
      ++safety_.forced_completions;
      if (!workload::matches_node(task.spec, node.spec)) ++safety_.forced_constraint_violations;
      if (!task.spec.required.all_le(node.spec.total) ||
          !placement_demand(task.spec).all_le(node.spec.total)) {
        ++safety_.forced_capacity_violations;
      }
    }
    if (now - c.recommended_at > cfg_.recommendation_ttl) ++safety_.expired_recommendations_used;
    if (observer_) observer_(c, cell_, now);
  }
}

TickStats Engine::run_tick(SimTime tick_start) {
  TickStats stats;
  sync_agents();
  for (NodeIndex n : cell_.take_touched_nodes()) active_.insert(n);
  for (auto& a : agents_) {
    if (!cell_.node(a.node()).online && (!a.flows().empty() || !a.incoming().empty())) a.reset();
  }
  for (auto& b : brokers_) b->evict_stale(tick_start, cfg_.cache_ttl);

  // Fresh status reports reach the brokers ahead of carried-over traffic.
  std::vector<Message> inbox;
  for (NodeIndex n = 0; n < cell_.node_slots(); ++n) {
    if (cell_.node(n).online) send_status(n, tick_start, inbox);
  }
  for (auto& m : queue_) {
    if (m.sent_at == 0) m.sent_at = tick_start;
    inbox.push_back(std::move(m));
  }
  queue_.clear();

  for (int r = 0; r < cfg_.rounds_per_tick; ++r) {
    const SimTime now = tick_start + r * cfg_.round_length();
    std::vector<Message> outbox;
    std::vector<Completion> completions;
    std::vector<std::pair<TaskIndex, model::TaskId>> released;
    RoundContext ctx{cell_,    cfg_,     now,      outbox,   next_correlation_, stats,
                     safety_,  completions, released, sampler_, alerts_};
    if (r == 0 && brokers_.size() > 1) {
      for (const auto& b : brokers_) {
        Message g;
        g.kind = MessageKind::kBrokerCacheSync;
        g.sender = AgentRef::Broker(b->index());
        g.cache_entries = b->entries();
        for (const auto& other : brokers_) {
          if (other == b) continue;
          Message copy = g;
          copy.recipient = AgentRef::Broker(other->index());
          ctx.send(std::move(copy));
        }
      }
    }
    trace(inbox);
    stats.messages += inbox.size();
    deliver(inbox, ctx);
    std::vector<NodeIndex> act(active_.begin(), active_.end());
    for (NodeIndex n : act) {
      if (!agents_[n].activity(ctx, static_cast<int>(brokers_.size()))) active_.erase(n);
    }
    apply_completions(completions, stats, now);
    for (const auto& [t, id] : released) {
      auto it = submitted_.find(t);
      if (it != submitted_.end() && it->second == id) submitted_.erase(it);
    }
    for (NodeIndex n : cell_.take_touched_nodes()) {
      active_.insert(n);
      if (cell_.node(n).online) send_status(n, now, outbox);
    }
    inbox = std::move(outbox);
  }
  queue_ = std::move(inbox);
  return stats;
}

json Engine::to_json() const {
  json agents = json::array();
  for (const auto& a : agents_) agents.push_back(a.to_json());
  json brokers = json::array();
  for (const auto& b : brokers_) brokers.push_back(b->to_json());
  json queue = json::array();
  for (const auto& m : queue_) queue.push_back(ToJson(m));
  json submitted = json::array();
  for (const auto& [t, id] : submitted_) submitted.push_back({t, id});
  const auto& s = safety_;
  return {{"config", cfg_.to_json()},
          {"rng", rng_.state()},
          {"sampler_rng", const_cast<Sampler&>(sampler_).rng().state()},
          {"agents", agents},
          {"brokers", brokers},
          {"active", active_},
          {"queue", queue},
          {"submitted", submitted},
          {"next_correlation", next_correlation_},
          {"safety",
           {s.nonforced_completions, s.forced_completions, s.unstable_after_nonforced,
            s.rus_violations_after_nonforced, s.forced_constraint_violations,
            s.forced_capacity_violations, s.expired_recommendations_used,
            s.cancelled_completions}}};
}

void Engine::restore(const json& j) {
  rng_.set_state(j.at("rng").get<std::uint64_t>());
  sampler_.rng().set_state(j.at("sampler_rng").get<std::uint64_t>());
  const auto& agents = j.at("agents");
  agents_.assign(agents.size(), NodeAgent());
  for (std::size_t i = 0; i < agents.size(); ++i) agents_[i].restore(agents[i]);
  sync_agents();
  const auto& brokers = j.at("brokers");
  if (brokers.size() != brokers_.size()) {
    throw ConfigError("snapshot broker count differs from configuration");
  }
  for (std::size_t i = 0; i < brokers.size(); ++i) brokers_[i]->restore(brokers[i]);
  active_ = j.at("active").get<std::set<NodeIndex>>();
  queue_.clear();
  for (const auto& m : j.at("queue")) queue_.push_back(MessageFromJson(m));
  submitted_.clear();
  for (const auto& p : j.at("submitted")) {
    submitted_[p.at(0).get<TaskIndex>()] = p.at(1).get<std::string>();
  }
  next_correlation_ = j.at("next_correlation").get<std::uint64_t>();
  const auto& s = j.at("safety");
  safety_ = {s.at(0), s.at(1), s.at(2), s.at(3), s.at(4), s.at(5), s.at(6), s.at(7)};
}

}  // namespace cellsim::masb
