#include "cellsim/workload/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cellsim/common/errors.h"
#include "cellsim/workload/constraints.h"

namespace cellsim::workload {

namespace {

void CheckRange(const Range& r, const char* what, double lo = 0.0) {
  if (!(r.min >= lo) || !(r.max >= r.min) || !std::isfinite(r.max)) {
    throw ConfigError(std::string("invalid range for ") + what);
  }
}

void CheckFraction(double f, const char* what) {
  if (!(f >= 0.0 && f <= 1.0)) throw ConfigError(std::string(what) + " must be in [0,1]");
}

Range RangeFrom(const nlohmann::json& j, const Range& fallback) {
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_object()) return {j.value("min", fallback.min), j.value("max", fallback.max)};
  throw ConfigError("range must be [min, max] or {min, max}");
}

TaskShape ShapeFrom(const nlohmann::json& j, const TaskShape& fallback) {
  TaskShape s = fallback;
  if (j.contains("cpu")) s.cpu = RangeFrom(j.at("cpu"), s.cpu);
  if (j.contains("memory")) s.memory = RangeFrom(j.at("memory"), s.memory);
  if (j.contains("usage_factor")) s.usage_factor = RangeFrom(j.at("usage_factor"), s.usage_factor);
  return s;
}

nlohmann::json RangeJson(const Range& r) { return nlohmann::json::array({r.min, r.max}); }
nlohmann::json ShapeJson(const TaskShape& s) {
  return {{"cpu", RangeJson(s.cpu)},
          {"memory", RangeJson(s.memory)},
          {"usage_factor", RangeJson(s.usage_factor)}};
}

}  // namespace

void SynthConfig::validate() const {
  if (node_count < 0) throw ConfigError("node_count must be >= 0");
  if (node_classes.empty()) throw ConfigError("node_classes must not be empty");
  double weight = 0;
  for (const auto& c : node_classes) {
    if (!(c.cpu > 0) || !(c.memory > 0) || !(c.weight >= 0)) {
      throw ConfigError("node class needs positive capacity and non-negative weight");
    }
    weight += c.weight;
  }
  if (!(weight > 0)) throw ConfigError("node class weights sum to zero");
  CheckFraction(arm_fraction, "arm_fraction");
  CheckFraction(external_ip_fraction, "external_ip_fraction");
  if (kernel_versions < 1) throw ConfigError("kernel_versions must be >= 1");
  if (initial_tasks < 0) throw ConfigError("initial_tasks must be >= 0");
  if (!(task_arrival_rate >= 0)) throw ConfigError("task_arrival_rate must be >= 0");
  if (!(duration_minutes > 0)) throw ConfigError("duration_minutes must be > 0");
  CheckFraction(batch_fraction, "batch_fraction");
  CheckRange(batch_duration_minutes, "batch_duration_minutes");
  CheckRange(service_duration_minutes, "service_duration_minutes");
  for (const TaskShape* s : {&batch, &service}) {
    CheckRange(s->cpu, "cpu");
    CheckRange(s->memory, "memory");
    CheckRange(s->usage_factor, "usage_factor");
  }
  if (!(usage_jitter >= 0)) throw ConfigError("usage_jitter must be >= 0");
  if (!(usage_period_s > 0)) throw ConfigError("usage_period_s must be > 0");
  CheckFraction(constraint_rate, "constraint_rate");
  CheckFraction(production_fraction, "production_fraction");
  for (const auto& b : bursts) {
    CheckFraction(b.task_fraction, "burst task_fraction");
    if (!(b.factor > 0) || !(b.at_minute >= 0)) throw ConfigError("invalid burst");
  }
  if (!(placement_overcommit > 0)) throw ConfigError("placement_overcommit must be > 0");
}

SynthConfig SynthConfig::FromJson(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.node_count = j.value("node_count", c.node_count);
    if (j.contains("node_classes")) {
      c.node_classes.clear();
      for (const auto& n : j.at("node_classes")) {
        c.node_classes.push_back(
            {n.at("cpu").get<double>(), n.at("memory").get<double>(), n.value("weight", 1.0)});
      }
    }
    c.arm_fraction = j.value("arm_fraction", c.arm_fraction);
    c.external_ip_fraction = j.value("external_ip_fraction", c.external_ip_fraction);
    c.kernel_versions = j.value("kernel_versions", c.kernel_versions);
    c.initial_tasks = j.value("initial_tasks", c.initial_tasks);
    c.task_arrival_rate = j.value("task_arrival_rate", c.task_arrival_rate);
    c.duration_minutes = j.value("duration_minutes", c.duration_minutes);
    c.batch_fraction = j.value("batch_fraction", c.batch_fraction);
    if (j.contains("batch_duration_minutes")) {
      c.batch_duration_minutes = RangeFrom(j.at("batch_duration_minutes"), c.batch_duration_minutes);
    }
    if (j.contains("service_duration_minutes")) {
      c.service_duration_minutes =
          RangeFrom(j.at("service_duration_minutes"), c.service_duration_minutes);
    }
    if (j.contains("batch")) c.batch = ShapeFrom(j.at("batch"), c.batch);
    if (j.contains("service")) c.service = ShapeFrom(j.at("service"), c.service);
    c.usage_jitter = j.value("usage_jitter", c.usage_jitter);
    c.usage_period_s = j.value("usage_period_s", c.usage_period_s);
    c.constraint_rate = j.value("constraint_rate", c.constraint_rate);
    c.production_fraction = j.value("production_fraction", c.production_fraction);
    if (j.contains("bursts")) {
      for (const auto& b : j.at("bursts")) {
        c.bursts.push_back({b.at("at_minute").get<double>(), b.at("task_fraction").get<double>(),
                            b.at("factor").get<double>()});
      }
    }
    c.placement_overcommit = j.value("placement_overcommit", c.placement_overcommit);
    c.stagger_initial_lifetimes = j.value("stagger_initial_lifetimes", c.stagger_initial_lifetimes);
    c.cost_model.node_memory_mb = j.value("node_memory_mb", c.cost_model.node_memory_mb);
    c.cost_model.canonical_mb = j.value("canonical_mb", c.cost_model.canonical_mb);
    if (j.contains("profile")) {
      c.cost_model.profile_name = j.at("profile").get<std::string>();
      c.cost_model.profile = lmdt::profile_for(c.cost_model.profile_name);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  } catch (const LookupError& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

SynthConfig SynthConfig::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("synthetic config " + path + ": " + e.what());
  }
  return FromJson(j);
}

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : node_classes) {
    classes.push_back({{"cpu", c.cpu}, {"memory", c.memory}, {"weight", c.weight}});
  }
  nlohmann::json bs = nlohmann::json::array();
  for (const auto& b : bursts) {
    bs.push_back({{"at_minute", b.at_minute}, {"task_fraction", b.task_fraction},
                  {"factor", b.factor}});
  }
  return {{"seed", seed},
          {"node_count", node_count},
          {"node_classes", classes},
          {"arm_fraction", arm_fraction},
          {"external_ip_fraction", external_ip_fraction},
          {"kernel_versions", kernel_versions},
          {"initial_tasks", initial_tasks},
          {"task_arrival_rate", task_arrival_rate},
          {"duration_minutes", duration_minutes},
          {"batch_fraction", batch_fraction},
          {"batch_duration_minutes", RangeJson(batch_duration_minutes)},
          {"service_duration_minutes", RangeJson(service_duration_minutes)},
          {"batch", ShapeJson(batch)},
          {"service", ShapeJson(service)},
          {"usage_jitter", usage_jitter},
          {"usage_period_s", usage_period_s},
          {"constraint_rate", constraint_rate},
          {"production_fraction", production_fraction},
          {"bursts", bs},
          {"placement_overcommit", placement_overcommit},
          {"stagger_initial_lifetimes", stagger_initial_lifetimes},
          {"node_memory_mb", cost_model.node_memory_mb},
          {"canonical_mb", cost_model.canonical_mb},
          {"profile", cost_model.profile_name}};
}

SynthSource::SynthSource(SynthConfig cfg, std::uint32_t source_index)
    : cfg_(std::move(cfg)),
      source_index_(source_index),
      rng_(DeriveSeed(cfg_.seed, 0x5f17)),
      horizon_(Minutes(cfg_.duration_minutes)) {
  cfg_.validate();
  double total_weight = 0;
  for (const auto& c : cfg_.node_classes) total_weight += c.weight;
  for (int i = 0; i < cfg_.node_count; ++i) {
    double pick = rng_.uniform() * total_weight;
    const NodeClass* cls = &cfg_.node_classes.back();
    for (const auto& c : cfg_.node_classes) {
      if (pick < c.weight) {
        cls = &c;
        break;
      }
      pick -= c.weight;
    }
    model::NodeSpec n;
    n.id = std::to_string(i + 1);
    n.total = model::ResourceVector{cls->cpu, cls->memory};
    n.attributes["arch"] = rng_.uniform() < cfg_.arm_fraction ? "arm" : "x86";
    n.attributes["kernel"] = std::to_string(1 + rng_.below(cfg_.kernel_versions));
    if (rng_.uniform() < cfg_.external_ip_fraction) n.attributes["external-ip"] = "true";
    nodes_.push_back(std::move(n));
    node_required_.emplace_back(2, 0.0);
  }
  for (int i = 0; i < cfg_.initial_tasks; ++i) schedule(0, Action::kSubmit, new_task(0, true));
  if (cfg_.task_arrival_rate > 0) schedule(0, Action::kArrival, 0);
  for (std::size_t b = 0; b < cfg_.bursts.size(); ++b) {
    schedule(Minutes(cfg_.bursts[b].at_minute), Action::kBurst, static_cast<std::uint32_t>(b));
  }
}

double SynthSource::draw(const Range& r) { return r.min + (r.max - r.min) * rng_.uniform(); }

void SynthSource::schedule(SimTime at, Action a, std::uint32_t task) {
  if (at >= horizon_) return;
  queue_.push(Pending{at, order_++, a, task});
}

std::uint32_t SynthSource::new_task(SimTime at, bool initial) {
  GenTask t;
  const auto idx = static_cast<std::uint32_t>(tasks_.size());
  t.id = std::to_string(idx + 1) + "-0";
  const bool is_batch = rng_.uniform() < cfg_.batch_fraction;
  const TaskShape& shape = is_batch ? cfg_.batch : cfg_.service;
  (is_batch ? batch_tasks_ : service_tasks_)++;
  t.batch = is_batch;
  t.required = model::ResourceVector{draw(shape.cpu), draw(shape.memory)};
  t.factor = model::ResourceVector{draw(shape.usage_factor), draw(shape.usage_factor)};
  double minutes = draw(is_batch ? cfg_.batch_duration_minutes : cfg_.service_duration_minutes);
  // Tasks present at the start are already part way through their lifetime.
  if (initial && cfg_.stagger_initial_lifetimes) minutes *= rng_.uniform();
  t.end = at + Minutes(minutes);
  if (rng_.uniform() < cfg_.constraint_rate) {
    using model::ConstraintOp;
    switch (rng_.below(5)) {
      case 0: t.constraints.push_back({ConstraintOp::kEqual, "arch", "x86"}); break;
      case 1: t.constraints.push_back({ConstraintOp::kNotEqual, "arch", "arm"}); break;
      case 2: t.constraints.push_back({ConstraintOp::kGreaterThan, "kernel", "1"}); break;
      case 3:
        t.constraints.push_back(
            {ConstraintOp::kLessThan, "kernel", std::to_string(cfg_.kernel_versions)});
        break;
      default: t.constraints.push_back({ConstraintOp::kEqual, "external-ip", "true"}); break;
    }
  }
  tasks_.push_back(std::move(t));
  return idx;
}

void SynthSource::emit(SimTime at, EventPayload p) {
  WorkloadEvent e;
  e.timestamp = at;
  e.payload = std::move(p);
  e.source = source_index_;
  e.seq = seq_++;
  ready_.push_back(std::move(e));
}

void SynthSource::start_task(std::uint32_t ti) {
  GenTask& t = tasks_[ti];
  t.started = true;
  if (nodes_.empty()) return;
  std::int32_t best = -1;
  double best_load = 0;
  for (int probe = 0; probe < 32; ++probe) {
    const auto n = static_cast<std::int32_t>(rng_.below(nodes_.size()));
    if (!matches_constraints(t.constraints, nodes_[n].attributes)) continue;
    const auto& total = nodes_[n].total;
    const auto& req = node_required_[n];
    bool fits = true;
    double load = 0;
    for (int d = 0; d < 2; ++d) {
      const double after = req[d] + t.required[d];
      fits = fits && after <= total[d] * cfg_.placement_overcommit;
      load = std::max(load, after / total[d]);
    }
    if (fits) {
      best = n;
      break;
    }
    if (best < 0 || load < best_load) {
      best = n;
      best_load = load;
    }
  }
  if (best < 0) return;
  t.node = best;
  node_required_[best] += t.required;
}

void SynthSource::emit_usage(SimTime at, std::uint32_t ti) {
  GenTask& t = tasks_[ti];
  UpdateTaskUsedResources u;
  u.task = t.id;
  u.used = model::ResourceVector{t.required[0] * t.factor[0] * t.burst,
                                 t.required[1] * t.factor[1] * t.burst};
  u.migration_cost_mb = cfg_.cost_model.cost_mb(u.used[1]);
  if (t.node >= 0) u.machine = nodes_[t.node].id;
  emit(at, std::move(u));
}

void SynthSource::step() {
  if (!nodes_emitted_) {
    nodes_emitted_ = true;
    for (const auto& n : nodes_) {
      model::NodeSpec bare = n;
      bare.attributes.clear();
      emit(0, AddNode{std::move(bare)});
      emit(0, AddNodeAttributes{n.id, n.attributes});
    }
    if (!ready_.empty()) return;
  }
  if (queue_.empty()) return;
  const Pending p = queue_.top();
  queue_.pop();
  const SimTime period = Seconds(cfg_.usage_period_s);
  switch (p.action) {
    case Action::kArrival: {
      const std::uint32_t ti = new_task(p.at);
      schedule(p.at, Action::kSubmit, ti);
      // Poisson process: exponential gaps with mean 1/rate minutes.
      const double gap = -std::log(1.0 - rng_.uniform()) / cfg_.task_arrival_rate;
      schedule(p.at + std::max<SimTime>(1, Minutes(gap)), Action::kArrival, 0);
      break;
    }
    case Action::kSubmit: {
      GenTask& t = tasks_[p.task];
      t.live = true;
      model::TaskSpec spec;
      spec.id = t.id;
      spec.required = t.required;
      spec.used = model::ResourceVector(2, 0.0);
      spec.migration_cost_mb = cfg_.cost_model.cost_mb(0.0);
      spec.production = rng_.uniform() < cfg_.production_fraction;
      spec.priority = spec.production ? 9 : static_cast<int>(rng_.below(9));
      spec.unstarted = true;
      emit(p.at, AddTask{std::move(spec)});
      if (!t.constraints.empty()) emit(p.at, UpdateTaskConstraints{t.id, t.constraints});
      const SimTime first = p.at + static_cast<SimTime>(rng_.below(period));
      if (first < t.end) schedule(first, Action::kUsage, p.task);
      schedule(t.end, Action::kEnd, p.task);
      break;
    }
    case Action::kUsage: {
      GenTask& t = tasks_[p.task];
      if (!t.live) break;
      if (!t.started) {
        start_task(p.task);
      } else {
        const Range& bounds = (t.batch ? cfg_.batch : cfg_.service).usage_factor;
        for (int d = 0; d < 2; ++d) {
          const double jitter = (2.0 * rng_.uniform() - 1.0) * cfg_.usage_jitter;
          t.factor[d] = std::clamp(t.factor[d] + jitter, bounds.min, bounds.max);
        }
      }
      emit_usage(p.at, p.task);
      if (p.at + period < t.end) schedule(p.at + period, Action::kUsage, p.task);
      break;
    }
    case Action::kEnd: {
      GenTask& t = tasks_[p.task];
      if (!t.live) break;
      t.live = false;
      if (t.node >= 0) node_required_[t.node] -= t.required;
      emit(p.at, RemoveTask{t.id});
      break;
    }
    case Action::kBurst: {
      const UsageBurst& b = cfg_.bursts[p.task];
      for (std::uint32_t ti = 0; ti < tasks_.size(); ++ti) {
        GenTask& t = tasks_[ti];
        if (!t.live || !t.started) continue;
        if (rng_.uniform() >= b.task_fraction) continue;
        t.burst *= b.factor;
        emit_usage(p.at, ti);
      }
      break;
    }
  }
}

const WorkloadEvent* SynthSource::peek() {
  while (ready_.empty() && (!nodes_emitted_ || !queue_.empty())) step();
  return ready_.empty() ? nullptr : &ready_.front();
}

void SynthSource::pop() {
  if (peek()) ready_.pop_front();
}

std::vector<WorkloadEvent> synth_generate(const SynthConfig& cfg) {
  SynthSource src(cfg);
  std::vector<WorkloadEvent> out;
  while (const WorkloadEvent* e = src.peek()) {
    out.push_back(*e);
    src.pop();
  }
  return out;
}

}  // namespace cellsim::workload
