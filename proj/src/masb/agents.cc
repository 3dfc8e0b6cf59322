#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cellsim/common/errors.h"
#include "cellsim/masb/engine.h"
#include "cellsim/workload/constraints.h"

namespace cellsim::masb {

using model::ResourceVector;
using nlohmann::json;
using workload::ResourceVectorFromJson;
using workload::ToJson;

namespace {

const model::AttributeMap kNoAttributes;

std::string FormatClock(SimTime t) {
  const long long ms = t / 1000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%03lld", ms / 3600000, (ms / 60000) % 60,
                (ms / 1000) % 60, ms % 1000);
  return buf;
}

std::string FormatVector(const ResourceVector& v) {
  std::string out = "[";
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.10f", i ? "," : "", v[i]);
    out += buf;
  }
  return out + "]";
}

std::string FormatTask(const model::TaskSpec& t) {
  char cost[64];
  std::snprintf(cost, sizeof cost, "%.2f", t.migration_cost_mb);
  std::string out = "Task [" + t.id + "]";
  if (t.production) out += " (PROD)";
  if (t.unstarted) out += " (unstarted)";
  out += " Priority=" + std::to_string(t.priority) + " Required resources=" +
         FormatVector(t.required) + "\n  Used resources=" + FormatVector(t.used) +
         " Migration cost = " + cost + " [MB]";
  return out;
}

std::string SampleHeader(SimTime now, const std::string& agent, const std::string& id) {
  return FormatClock(now) + " " + agent + " (node=" + id + ") INFO\nSAMPLE:\n";
}

bool Expired(const CandidateNodeRecommendation& r, SimTime now, SimTime ttl) {
  return now - r.created_at > ttl;
}

json RngJson(const Rng& r) { return r.state(); }

}  // namespace

void RoundContext::alert(const std::string& text) {
  if (alerts) *alerts << "ALERT time=" << now << " " << text << "\n";
}

const ResourceVector& placement_demand(const model::TaskSpec& t) {
  return t.unstarted ? t.required : t.used;
}

ResourceVector node_load(const workload::Cell& cell, NodeIndex n) {
  ResourceVector load(cell.dimension());
  for (TaskIndex t : cell.node(n).residents) load += placement_demand(cell.task(t).spec);
  return load;
}

double ScoreWith(ScorerKind k, const EngineConfig& cfg, const ResourceVector& total,
                 const ResourceVector& before, const ResourceVector& after) {
  switch (k) {
    case ScorerKind::kSias: return allocation_score(cfg.sias, total, after);
    case ScorerKind::kSiasGain: return score_gain(cfg.sias, total, before, after);
    case ScorerKind::kSras: return allocation_score(cfg.sras, total, after);
    case ScorerKind::kSrasGain: return score_gain(cfg.sras, total, before, after);
  }
  return 0.0;
}

// ---------------------------------------------------------------- Broker

Broker::Broker(std::uint32_t index, std::uint64_t seed) : index_(index), rng_(seed) {}

void Broker::update(const BrokerCacheEntry& e) {
  if (!pos_.count(e.node)) {
    pos_[e.node] = keys_.size();
    keys_.push_back(e.node);
  }
  cache_.put(e.node, e);
}

void Broker::erase_key(NodeIndex n) {
  auto it = pos_.find(n);
  if (it == pos_.end()) return;
  const std::size_t i = it->second;
  keys_[i] = keys_.back();
  pos_[keys_[i]] = i;
  keys_.pop_back();
  pos_.erase(n);
  cache_.erase(n);
}

void Broker::evict_stale(SimTime now, SimTime ttl) {
  std::vector<NodeIndex> stale;
  for (NodeIndex k : keys_) {
    auto e = cache_.load(k);
    if (!e || now - e->last_update > ttl) stale.push_back(k);
  }
  for (NodeIndex k : stale) erase_key(k);
}

std::vector<BrokerCacheEntry> Broker::entries() const {
  std::vector<BrokerCacheEntry> out;
  out.reserve(keys_.size());
  for (NodeIndex k : keys_) {
    if (auto e = cache_.load(k)) out.push_back(*e);
  }
  return out;
}

QuoteResult Broker::get_candidate_nodes(const model::TaskSpec& task, NodeIndex source,
                                        bool initial, RoundContext& ctx) {
  QuoteResult out;
  const EngineConfig& cfg = ctx.cfg;
  const std::size_t limit = initial ? cfg.initial_scan_limit : cfg.realloc_scan_limit;
  const ScorerKind scorer = initial ? cfg.initial_scorer : cfg.realloc_scorer;
  const ResourceVector& demand = placement_demand(task);
  using Ptr = std::shared_ptr<const BrokerCacheEntry>;
  std::vector<std::pair<Ptr, double>> positive;
  std::vector<Ptr> fitting, capable;
  const std::size_t n = keys_.size();
  if (n == 0) {
    out.unschedulable = true;
    return out;
  }
  // Random rotation of the directory stands in for a per-request shuffle.
  const std::size_t start = rng_.below(n);
  for (std::size_t i = 0; i < n && out.matched < limit; ++i) {
    const NodeIndex k = keys_[(start + i) % n];
    if (k == source) continue;
    Ptr e = cache_.load(k);
    if (!e) continue;
    if (!workload::matches_constraints(task.constraints,
                                       e->attributes ? *e->attributes : kNoAttributes)) {
      continue;
    }
    ++out.matched;
    const NodeStats& st = e->stats;
    const ResourceVector before = st.total - st.available;
    const ResourceVector after = before + demand;
    bool fits = after.all_le(st.total);
    if (fits && task.production) fits = (st.production_required + task.required).all_le(st.total);
    const double s = fits ? ScoreWith(scorer, cfg, st.total, before, after) : 0.0;
    if (s > 0) {
      positive.emplace_back(e, s);
    } else if (fits) {
      fitting.push_back(e);
    } else if (task.required.all_le(st.total) && demand.all_le(st.total)) {
      capable.push_back(e);
    }
  }
  if (out.matched == 0) {
    out.unschedulable = true;
    return out;
  }
  const std::size_t want = cfg.recommendation_count;
  auto make = [&](const Ptr& e, double fitness, bool forced) {
    CandidateNodeRecommendation r;
    r.node = e->node;
    r.node_id = e->id;
    r.available = e->stats.available;
    r.fitness = fitness;
    r.forced = forced;
    r.created_at = ctx.now;
    return r;
  };
  // Weighted sampling without replacement: keep the largest log(u)/w keys.
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(positive.size());
  for (std::size_t i = 0; i < positive.size(); ++i) {
    const double u = 1.0 - rng_.uniform();
    keyed.emplace_back(std::log(u) / positive[i].second, i);
  }
  const std::size_t take = std::min(want, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + take, keyed.end(), [](auto& a, auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; i < take; ++i) {
    const auto& [e, s] = positive[keyed[i].second];
    out.recommendations.push_back(make(e, s, false));
  }
  std::stable_sort(out.recommendations.begin(), out.recommendations.end(),
                   [](const auto& a, const auto& b) {
                     return a.fitness != b.fitness ? a.fitness > b.fitness : a.node < b.node;
                   });
  auto pad = [&](std::vector<Ptr>& pool, double fitness, bool forced) {
    for (std::size_t i = 0; i < pool.size() && out.recommendations.size() < want; ++i) {
      std::swap(pool[i], pool[i + rng_.below(pool.size() - i)]);
      out.recommendations.push_back(make(pool[i], fitness, forced));
    }
  };
  pad(fitting, 0.0, false);
  pad(capable, cfg.forced_fitness, true);
  return out;
}

void Broker::start_initial(const Message& m, RoundContext& ctx) {
  const auto& spec = *m.task_spec;
  QuoteResult q = get_candidate_nodes(spec, kNoIndex, true, ctx);
  if (q.unschedulable) {
    ++ctx.stats.unschedulable;
    if (alerted_.insert(spec.id).second) {
      ctx.alert("task unschedulable: no cached node matches the constraints of " + spec.id);
    }
  }
  if (q.recommendations.empty()) {
    ctx.released.emplace_back(m.task, spec.id);
    return;
  }
  InitialFlow f;
  f.task = m.task;
  f.spec = m.task_spec;
  f.recs = std::move(q.recommendations);
  initial_[m.correlation] = std::move(f);
  try_next(m.correlation, ctx);
}

void Broker::try_next(std::uint64_t key, RoundContext& ctx) {
  auto it = initial_.find(key);
  if (it == initial_.end()) return;
  InitialFlow& f = it->second;
  const ResourceVector& demand = placement_demand(*f.spec);
  while (f.next < f.recs.size()) {
    const auto& rec = f.recs[f.next];
    if (Expired(rec, ctx.now, ctx.cfg.recommendation_ttl)) {
      ++f.next;
      continue;
    }
    // Optimistic reservation so later quotes in this round see the load.
    cache_.replace_with(rec.node, [&](const BrokerCacheEntry& e) {
      BrokerCacheEntry c = e;
      c.stats.available -= demand;
      if (f.spec->production) c.stats.production_required += f.spec->required;
      return c;
    });
    Message req;
    req.kind = MessageKind::kTaskMigrationProcessRequest;
    req.sender = AgentRef::Broker(index_);
    req.recipient = AgentRef::Node(rec.node);
    req.correlation = ctx.correlation();
    req.task = f.task;
    req.task_spec = f.spec;
    req.source = kNoIndex;
    req.forced = rec.forced;
    req.recommended_at = rec.created_at;
    pending_[req.correlation] = key;
    ++ctx.stats.initial_attempts;
    ctx.send(std::move(req));
    return;
  }
  ctx.released.emplace_back(f.task, f.spec->id);
  initial_.erase(it);
}

void Broker::handle(const Message& m, RoundContext& ctx) {
  switch (m.kind) {
    case MessageKind::kNodeStatusReport: {
      BrokerCacheEntry e;
      e.node = m.sender.index;
      e.id = ctx.cell.node(m.sender.index).spec.id;
      e.stats = m.stats;
      e.attributes = m.attributes;
      e.last_update = m.sent_at;
      update(e);
      break;
    }
    case MessageKind::kBrokerCacheSync:
      for (const auto& e : m.cache_entries) {
        auto cur = cache_.load(e.node);
        if (!cur || cur->last_update < e.last_update) update(e);
      }
      break;
    case MessageKind::kGetCandidateNodesRequest: {
      QuoteResult q = get_candidate_nodes(*m.task_spec, m.source, false, ctx);
      if (q.unschedulable) ++ctx.stats.unschedulable;
      Message r;
      r.kind = MessageKind::kGetCandidateNodesResponse;
      r.sender = AgentRef::Broker(index_);
      r.recipient = m.sender;
      r.correlation = m.correlation;
      r.task = m.task;
      r.unschedulable = q.unschedulable;
      r.recommendations = std::move(q.recommendations);
      ctx.send(std::move(r));
      break;
    }
    case MessageKind::kSubmitTask:
      start_initial(m, ctx);
      break;
    case MessageKind::kTaskMigrationProcessConfirmationResponse: {
      auto p = pending_.find(m.correlation);
      if (p == pending_.end()) break;
      auto f = initial_.find(p->second);
      pending_.erase(p);
      if (f == initial_.end()) break;
      ctx.released.emplace_back(f->second.task, f->second.spec->id);
      initial_.erase(f);
      break;
    }
    case MessageKind::kTaskMigrationProcessErrorResponse: {
      auto p = pending_.find(m.correlation);
      if (p == pending_.end()) break;
      const std::uint64_t key = p->second;
      pending_.erase(p);
      auto f = initial_.find(key);
      if (f == initial_.end()) break;
      ++f->second.next;
      try_next(key, ctx);
      break;
    }
    default:
      break;
  }
}

json Broker::to_json() const {
  json entries = json::array();
  for (const auto& e : this->entries()) entries.push_back(ToJson(e));
  json flows = json::array();
  for (const auto& [key, f] : initial_) {
    json recs = json::array();
    for (const auto& r : f.recs) recs.push_back(ToJson(r));
    flows.push_back({{"key", key},
                     {"task", f.task},
                     {"spec", ToJson(*f.spec)},
                     {"recs", recs},
                     {"next", f.next}});
  }
  json pending = json::array();
  for (const auto& [corr, key] : pending_) pending.push_back({corr, key});
  return {{"index", index_}, {"rng", RngJson(rng_)}, {"entries", entries},
          {"initial", flows}, {"pending", pending}, {"alerted", alerted_}};
}

void Broker::restore(const json& j) {
  for (NodeIndex k : std::vector<NodeIndex>(keys_)) erase_key(k);
  rng_.set_state(j.at("rng").get<std::uint64_t>());
  for (const auto& e : j.at("entries")) update(CacheEntryFromJson(e));
  initial_.clear();
  for (const auto& f : j.at("initial")) {
    InitialFlow x;
    x.task = f.at("task").get<TaskIndex>();
    x.spec = std::make_shared<const model::TaskSpec>(workload::TaskSpecFromJson(f.at("spec")));
    for (const auto& r : f.at("recs")) x.recs.push_back(RecommendationFromJson(r));
    x.next = f.at("next").get<std::size_t>();
    initial_[f.at("key").get<std::uint64_t>()] = std::move(x);
  }
  pending_.clear();
  for (const auto& p : j.at("pending")) {
    pending_[p.at(0).get<std::uint64_t>()] = p.at(1).get<std::uint64_t>();
  }
  alerted_ = j.at("alerted").get<std::set<model::TaskId>>();
}

// ------------------------------------------------------------ NodeAgent

NodeAgent::NodeAgent(NodeIndex node, std::uint64_t seed) : node_(node), rng_(seed) {}

void NodeAgent::reset() {
  incoming_.clear();
  flows_.clear();
  backoff_.clear();
}

std::shared_ptr<const model::AttributeMap> NodeAgent::attributes(const workload::Cell& cell) {
  const auto& a = cell.node(node_).spec.attributes;
  if (!attrs_ || *attrs_ != a) attrs_ = std::make_shared<const model::AttributeMap>(a);
  return attrs_;
}

NodeStats NodeAgent::stats(const workload::Cell& cell) const {
  NodeStats s;
  const auto& node = cell.node(node_);
  s.total = node.spec.total;
  ResourceVector load = node_load(cell, node_);
  s.production_required = cell.production_required_sum(node_);
  for (const auto& r : incoming_) {
    load += r.demand;
    s.production_required += r.production;
  }
  s.available = s.total - load;
  s.tasks = static_cast<std::uint32_t>(node.residents.size());
  return s;
}

bool NodeAgent::admits(const model::TaskSpec& task, const workload::Cell& cell) const {
  const auto& node = cell.node(node_);
  if (!node.online || !workload::matches_node(task, node.spec)) return false;
  NodeStats s = stats(cell);
  if (!placement_demand(task).all_le(s.available)) return false;
  if (task.production) s.production_required += task.required;
  return rus_fits(s.total, s.production_required);
}

bool NodeAgent::handle_migration_request(const model::TaskSpec& task,
                                         const workload::Cell& cell, NodeStats* out) const {
  const bool ok = admits(task, cell);
  if (out && cell.node(node_).online) *out = stats(cell);
  return ok;
}

bool NodeAgent::handle_process_request(const Message& m, RoundContext& ctx) {
  const auto& cell = ctx.cell;
  const auto& node = cell.node(node_);
  if (!node.online || m.source == node_ || m.task >= cell.task_slots()) return false;
  // The recommendation may have aged past its TTL while the request was in flight.
  if (ctx.now - m.recommended_at > ctx.cfg.recommendation_ttl) return false;
  const auto& t = cell.task(m.task);
  if (!t.alive || !m.task_spec || t.spec.id != m.task_spec->id || t.node != m.source) return false;
  for (const auto& r : incoming_) {
    if (r.task == m.task) return false;
  }
  const auto& spec = t.spec;
  if (m.forced) {
    // Forcing skips only the free-capacity check.
    if (!workload::matches_node(spec, node.spec) || !spec.required.all_le(node.spec.total) ||
        !placement_demand(spec).all_le(node.spec.total)) {
      return false;
    }
  } else if (!admits(spec, cell)) {
    return false;
  }
  Reservation r;
  r.task = m.task;
  r.id = spec.id;
  r.demand = placement_demand(spec);
  r.production = spec.production ? spec.required : ResourceVector(cell.dimension());
  r.forced = m.forced;
  incoming_.push_back(std::move(r));
  ctx.completions.push_back({m.task, spec.id, m.source, node_, m.forced, m.recommended_at});
  return true;
}

void NodeAgent::release_reservation(TaskIndex t, const model::TaskId& id) {
  for (auto it = incoming_.begin(); it != incoming_.end(); ++it) {
    if (it->task == t && it->id == id) {
      incoming_.erase(it);
      return;
    }
  }
}

bool NodeAgent::needs_attention(const workload::Cell& cell) const {
  const auto& node = cell.node(node_);
  if (!node.online || node.residents.empty()) return false;
  if (node_overloaded(node.spec.total, cell.used_sum(node_), cell.production_required_sum(node_))) {
    return true;
  }
  for (TaskIndex t : node.residents) {
    if (is_compulsory(node.spec, cell.task(t).spec)) return true;
  }
  return false;
}

SanFlow* NodeAgent::find_flow(std::uint64_t corr, SanFlow::Stage stage,
                               const workload::Cell& cell) {
  for (auto it = flows_.begin(); it != flows_.end(); ++it) {
    SanFlow& f = it->second;
    if (f.correlation != corr || f.stage != stage) continue;
    // The task may have ended or moved while the reply was in flight.
    const bool live = f.task < cell.task_slots() && cell.task(f.task).alive &&
                      cell.task(f.task).spec.id == f.id && cell.task(f.task).node == node_;
    if (live) return &f;
    flows_.erase(it);
    return nullptr;
  }
  return nullptr;
}

std::optional<std::size_t> NodeAgent::select_target(SanFlow& f, RoundContext& ctx) {
  const auto& cell = ctx.cell;
  if (f.task >= cell.task_slots()) return std::nullopt;
  const auto& spec = cell.task(f.task).spec;
  const ResourceVector& demand = placement_demand(spec);
  const SimTime ttl = ctx.cfg.recommendation_ttl;
  auto tried = [&](NodeIndex n) {
    return std::find(f.tried.begin(), f.tried.end(), n) != f.tried.end();
  };
  std::vector<std::pair<std::size_t, double>> scored;
  std::vector<std::size_t> zero, forced;
  for (const auto& [idx, st] : f.accepted) {
    const auto& rec = f.recs[idx];
    if (tried(rec.node) || Expired(rec, ctx.now, ttl)) continue;
    const ResourceVector before = st.total - st.available;
    const ResourceVector after = before + demand;
    if (!after.all_le(st.total)) continue;
    const double s = ScoreWith(ctx.cfg.realloc_scorer, ctx.cfg, st.total, before, after);
    if (s > 0) {
      scored.emplace_back(idx, s);
    } else {
      zero.push_back(idx);
    }
  }
  for (std::size_t i = 0; i < f.recs.size(); ++i) {
    const auto& rec = f.recs[i];
    if (rec.forced && !tried(rec.node) && !Expired(rec, ctx.now, ttl)) forced.push_back(i);
  }
  std::optional<std::size_t> pick;
  if (!scored.empty()) {
    double sum = 0;
    for (const auto& s : scored) sum += s.second;
    double r = rng_.uniform() * sum;
    pick = scored.back().first;
    for (const auto& [idx, s] : scored) {
      if (r < s) {
        pick = idx;
        break;
      }
      r -= s;
    }
  } else if (!zero.empty()) {
    pick = zero[rng_.below(zero.size())];
  } else if (!forced.empty()) {
    pick = forced[rng_.below(forced.size())];
  }
  if (pick && ctx.sampler.take(ctx.cfg.target_sample_rate)) {
    std::ostringstream s;
    s << SampleHeader(ctx.now, "NodeAgent", cell.node(node_).spec.id)
      << "  Accepted recommendations for migration-out of task:\n  " << FormatTask(spec) << "\n"
      << "Source node: Node [" << cell.node(node_).spec.id << "] "
      << FormatVector(cell.node(node_).spec.total) << "\n"
      << "All non-expired recommendations (* selected):\n";
    auto line = [&](std::size_t idx, double fitness) {
      CandidateNodeRecommendation r = f.recs[idx];
      r.fitness = fitness;
      s << (idx == *pick ? "* " : "") << FormatRecommendation(r) << "\n";
    };
    for (const auto& [idx, sc] : scored) line(idx, sc);
    for (auto idx : zero) line(idx, 0.0);
    for (auto idx : forced) line(idx, f.recs[idx].fitness);
    *ctx.sampler.out() << s.str();
  }
  return pick;
}

void NodeAgent::step4(SanFlow& f, RoundContext& ctx) {
  auto idx = select_target(f, ctx);
  if (!idx) {
    flows_.erase(f.task);  // back to step 1 on a later round
    return;
  }
  const auto& rec = f.recs[*idx];
  f.target = *idx;
  f.stage = SanFlow::Stage::kProcess;
  f.correlation = ctx.correlation();
  Message req;
  req.kind = MessageKind::kTaskMigrationProcessRequest;
  req.sender = AgentRef::Node(node_);
  req.recipient = AgentRef::Node(rec.node);
  req.correlation = f.correlation;
  req.task = f.task;
  req.task_spec = std::make_shared<const model::TaskSpec>(ctx.cell.task(f.task).spec);
  req.source = node_;
  req.forced = rec.forced;
  req.recommended_at = rec.created_at;
  ++ctx.stats.migrations_attempted;
  ctx.send(std::move(req));
}

void NodeAgent::run_scs(RoundContext& ctx, int broker_count) {
  const auto& cell = ctx.cell;
  const auto& node = cell.node(node_);
  std::vector<const model::TaskSpec*> specs;
  specs.reserve(node.residents.size());
  for (TaskIndex t : node.residents) specs.push_back(&cell.task(t).spec);
  ScsResult res = select_candidate_services(node.spec, specs, ctx.cfg.sras, ctx.cfg.scs, rng_);
  ++ctx.stats.scs_runs;
  if (!res.feasible) {
    ctx.alert("node " + node.spec.id + " cannot be relieved by any task subset; offloading all");
  }
  if (!res.selected.empty() && ctx.sampler.take(ctx.cfg.scs_sample_rate)) {
    ResourceVector prod(cell.dimension());
    for (auto* s : specs) {
      if (s->production) prod += s->required;
    }
    std::ostringstream s;
    s << SampleHeader(ctx.now, "NodeAgent", node.spec.id)
      << "Selected overloading tasks for node [" << node.spec.id << "]\n"
      << "Node total resources = " << FormatVector(node.spec.total) << "\n"
      << "Node used resources (all tasks) = " << FormatVector(cell.used_sum(node_)) << "\n"
      << "Node used prod resources (all tasks) = " << FormatVector(prod) << "\n"
      << "All tasks (* Selected):\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const bool sel = std::binary_search(res.selected.begin(), res.selected.end(), i);
      s << (sel ? "* " : "") << FormatTask(*specs[i]) << "\n";
    }
    char cost[64];
    std::snprintf(cost, sizeof cost, "%.17g", res.cost_mb);
    s << "Node used resources (remaining tasks) = " << FormatVector(res.remaining_used) << "\n"
      << "Node used prod resources (remaining tasks) = " << FormatVector(res.remaining_production)
      << "\nTotal migration cost (selected tasks) = " << cost << " [MB]\n";
    *ctx.sampler.out() << s.str();
  }
  for (std::size_t i : res.selected) {
    const TaskIndex t = node.residents[i];
    const auto& spec = cell.task(t).spec;
    auto b = backoff_.find(spec.id);
    if (b != backoff_.end()) {
      if (ctx.now < b->second) continue;
      backoff_.erase(b);
    }
    SanFlow f;
    f.task = t;
    f.id = spec.id;
    f.stage = SanFlow::Stage::kCandidates;
    f.correlation = ctx.correlation();
    f.started = ctx.now;
    Message req;
    req.kind = MessageKind::kGetCandidateNodesRequest;
    req.sender = AgentRef::Node(node_);
    req.recipient = AgentRef::Broker(static_cast<std::uint32_t>(rng_.below(broker_count)));
    req.correlation = f.correlation;
    req.task = t;
    req.task_spec = std::make_shared<const model::TaskSpec>(spec);
    req.source = node_;
    flows_[t] = std::move(f);
    ctx.send(std::move(req));
  }
}

void NodeAgent::handle(const Message& m, RoundContext& ctx, int broker_count) {
  (void)broker_count;
  const auto& cell = ctx.cell;
  switch (m.kind) {
    case MessageKind::kTaskMigrationRequest: {
      NodeStats st;
      const bool ok = m.task_spec && handle_migration_request(*m.task_spec, cell, &st);
      Message r;
      r.kind = ok ? MessageKind::kTaskMigrationAcceptanceResponse
                  : MessageKind::kTaskMigrationRejectionResponse;
      r.sender = AgentRef::Node(node_);
      r.recipient = m.sender;
      r.correlation = m.correlation;
      r.task = m.task;
      r.stats = std::move(st);
      ctx.send(std::move(r));
      break;
    }
    case MessageKind::kTaskMigrationProcessRequest: {
      const bool ok = handle_process_request(m, ctx);
      Message r;
      r.kind = ok ? MessageKind::kTaskMigrationProcessConfirmationResponse
                  : MessageKind::kTaskMigrationProcessErrorResponse;
      r.sender = AgentRef::Node(node_);
      r.recipient = m.sender;
      r.correlation = m.correlation;
      r.task = m.task;
      r.forced = m.forced;
      ctx.send(std::move(r));
      break;
    }
    case MessageKind::kGetCandidateNodesResponse: {
      SanFlow* f = find_flow(m.correlation, SanFlow::Stage::kCandidates, cell);
      if (!f) break;
      if (m.unschedulable) {
        ctx.alert("task unschedulable: no cached node matches the constraints of " + f->id);
        backoff_[f->id] = ctx.now + ctx.cfg.unschedulable_backoff;
        flows_.erase(f->task);
        break;
      }
      if (m.recommendations.empty()) {
        flows_.erase(f->task);
        break;
      }
      f->recs = m.recommendations;
      if (f->task < cell.task_slots() && ctx.sampler.take(ctx.cfg.quote_sample_rate)) {
        std::ostringstream s;
        s << SampleHeader(ctx.now, "NodeAgent", cell.node(node_).spec.id)
          << "Candidate nodes recommendations for migration-out of task:\n"
          << FormatTask(cell.task(f->task).spec) << "\nSource node: Node ["
          << cell.node(node_).spec.id << "] " << FormatVector(cell.node(node_).spec.total)
          << ":\n";
        for (const auto& r : f->recs) s << FormatRecommendation(r) << "\n";
        *ctx.sampler.out() << s.str();
      }
      f->stage = SanFlow::Stage::kAcceptance;
      f->correlation = ctx.correlation();
      f->deadline = ctx.now + ctx.cfg.acceptance_wait;
      f->awaiting = 0;
      auto spec = std::make_shared<const model::TaskSpec>(cell.task(f->task).spec);
      for (const auto& rec : f->recs) {
        if (rec.forced) continue;
        Message req;
        req.kind = MessageKind::kTaskMigrationRequest;
        req.sender = AgentRef::Node(node_);
        req.recipient = AgentRef::Node(rec.node);
        req.correlation = f->correlation;
        req.task = f->task;
        req.task_spec = spec;
        req.source = node_;
        ++f->awaiting;
        ctx.send(std::move(req));
      }
      break;
    }
    case MessageKind::kTaskMigrationAcceptanceResponse:
    case MessageKind::kTaskMigrationRejectionResponse: {
      SanFlow* f = find_flow(m.correlation, SanFlow::Stage::kAcceptance, cell);
      if (!f || f->awaiting == 0) break;
      --f->awaiting;
      if (m.kind == MessageKind::kTaskMigrationRejectionResponse) break;
      for (std::size_t i = 0; i < f->recs.size(); ++i) {
        if (f->recs[i].node == m.sender.index && !f->recs[i].forced) {
          f->accepted.emplace_back(i, m.stats);
          break;
        }
      }
      break;
    }
    case MessageKind::kTaskMigrationProcessConfirmationResponse: {
      SanFlow* f = find_flow(m.correlation, SanFlow::Stage::kProcess, cell);
      if (f) flows_.erase(f->task);
      break;
    }
    case MessageKind::kTaskMigrationProcessErrorResponse: {
      SanFlow* f = find_flow(m.correlation, SanFlow::Stage::kProcess, cell);
      if (!f) break;
      ++ctx.stats.collisions;
      f->tried.push_back(f->recs[f->target].node);
      f->stage = SanFlow::Stage::kAcceptance;
      f->awaiting = 0;
      break;
    }
    default:
      break;
  }
}

bool NodeAgent::activity(RoundContext& ctx, int broker_count) {
  const auto& cell = ctx.cell;
  if (!cell.node(node_).online) {
    reset();
    return false;
  }
  for (auto it = flows_.begin(); it != flows_.end();) {
    const auto& t = cell.task(it->first);
    if (!t.alive || t.spec.id != it->second.id || t.node != node_) {
      it = flows_.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<TaskIndex> ready;
  for (const auto& [t, f] : flows_) {
    if (f.stage == SanFlow::Stage::kAcceptance && (f.awaiting == 0 || ctx.now >= f.deadline)) {
      ready.push_back(t);
    }
  }
  for (TaskIndex t : ready) {
    auto it = flows_.find(t);
    if (it != flows_.end()) step4(it->second, ctx);
  }
  const bool attention = needs_attention(cell);
  if (flows_.empty() && attention) run_scs(ctx, broker_count);
  return !flows_.empty() || attention;
}

json NodeAgent::to_json() const {
  json incoming = json::array();
  for (const auto& r : incoming_) {
    incoming.push_back({{"task", r.task},
                        {"id", r.id},
                        {"demand", ToJson(r.demand)},
                        {"production", ToJson(r.production)},
                        {"forced", r.forced}});
  }
  json flows = json::array();
  for (const auto& [t, f] : flows_) {
    json recs = json::array();
    for (const auto& r : f.recs) recs.push_back(ToJson(r));
    json accepted = json::array();
    for (const auto& [i, st] : f.accepted) accepted.push_back({i, ToJson(st)});
    flows.push_back({{"task", f.task},
                     {"id", f.id},
                     {"stage", static_cast<int>(f.stage)},
                     {"correlation", f.correlation},
                     {"started", f.started},
                     {"deadline", f.deadline},
                     {"recs", recs},
                     {"accepted", accepted},
                     {"awaiting", f.awaiting},
                     {"tried", f.tried},
                     {"target", f.target}});
  }
  return {{"node", node_}, {"rng", RngJson(rng_)}, {"incoming", incoming},
          {"flows", flows}, {"backoff", backoff_}};
}

void NodeAgent::restore(const json& j) {
  node_ = j.at("node").get<NodeIndex>();
  rng_.set_state(j.at("rng").get<std::uint64_t>());
  reset();
  for (const auto& r : j.at("incoming")) {
    Reservation x;
    x.task = r.at("task").get<TaskIndex>();
    x.id = r.at("id").get<std::string>();
    x.demand = ResourceVectorFromJson(r.at("demand"));
    x.production = ResourceVectorFromJson(r.at("production"));
    x.forced = r.at("forced").get<bool>();
    incoming_.push_back(std::move(x));
  }
  for (const auto& fj : j.at("flows")) {
    SanFlow f;
    f.task = fj.at("task").get<TaskIndex>();
    f.id = fj.at("id").get<std::string>();
    f.stage = static_cast<SanFlow::Stage>(fj.at("stage").get<int>());
    f.correlation = fj.at("correlation").get<std::uint64_t>();
    f.started = fj.at("started").get<SimTime>();
    f.deadline = fj.at("deadline").get<SimTime>();
    for (const auto& r : fj.at("recs")) f.recs.push_back(RecommendationFromJson(r));
    for (const auto& a : fj.at("accepted")) {
      f.accepted.emplace_back(a.at(0).get<std::size_t>(), NodeStatsFromJson(a.at(1)));
    }
    f.awaiting = fj.at("awaiting").get<std::size_t>();
    f.tried = fj.at("tried").get<std::vector<NodeIndex>>();
    f.target = fj.at("target").get<std::size_t>();
    flows_[f.task] = std::move(f);
  }
  backoff_ = j.at("backoff").get<std::map<model::TaskId, SimTime>>();
}

}  // namespace cellsim::masb
