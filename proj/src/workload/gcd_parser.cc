#include "cellsim/workload/gcd_parser.h"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "cellsim/common/errors.h"
#include "cellsim/workload/constraints.h"

namespace cellsim::workload {

namespace fs = std::filesystem;

const char* DirectoryName(TraceFileKind k) {
  switch (k) {
    case TraceFileKind::kMachineEvents: return "machine_events";
    case TraceFileKind::kMachineAttributes: return "machine_attributes";
    case TraceFileKind::kJobEvents: return "job_events";
    case TraceFileKind::kTaskEvents: return "task_events";
    case TraceFileKind::kTaskUsage: return "task_usage";
    case TraceFileKind::kTaskConstraints: return "task_constraints";
  }
  return "?";
}

std::optional<TraceFileKind> ParseTraceFileKind(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(TraceFileKind::kTaskConstraints); ++i) {
    auto k = static_cast<TraceFileKind>(i);
    if (s == DirectoryName(k)) return k;
  }
  return std::nullopt;
}

namespace {

constexpr TraceFileKind kAllKinds[] = {
    TraceFileKind::kMachineEvents, TraceFileKind::kMachineAttributes,
    TraceFileKind::kJobEvents,     TraceFileKind::kTaskEvents,
    TraceFileKind::kTaskUsage,     TraceFileKind::kTaskConstraints,
};

std::optional<long long> ParseInt(const std::string& s) { return ParseInteger(s); }

std::optional<double> ParseDouble(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

WorkloadEvent MakeEvent(SimTime ts, EventPayload p) {
  WorkloadEvent e;
  e.timestamp = ts;
  e.payload = std::move(p);
  return e;
}

}  // namespace

std::optional<WorkloadEvent> map_task_action(int action_code, const TaskRecord& r,
                                             AnomalyLog* log) {
  if (action_code < 0 || action_code > static_cast<int>(TaskAction::kUpdateRunning)) {
    if (log) {
      log->add({AnomalyKind::kCorruptRecord,
                "unknown task action " + std::to_string(action_code) + " for task " + r.task, 1,
                r.timestamp});
    }
    return std::nullopt;
  }
  const ResourceVector request{r.cpu_request, r.memory_request};
  switch (static_cast<TaskAction>(action_code)) {
    case TaskAction::kSubmit: {
      model::TaskSpec t;
      t.id = r.task;
      t.required = request;
      t.used = ResourceVector(request.size(), 0.0);
      t.migration_cost_mb = r.base_cost_mb;
      t.priority = r.priority;
      t.production = r.production;
      t.unstarted = true;
      return MakeEvent(r.timestamp, AddTask{std::move(t)});
    }
    case TaskAction::kSchedule:
      return std::nullopt;
    case TaskAction::kEvict:
    case TaskAction::kFail:
    case TaskAction::kFinish:
    case TaskAction::kKill:
    case TaskAction::kLost:
      return MakeEvent(r.timestamp, RemoveTask{r.task});
    case TaskAction::kUpdatePending:
    case TaskAction::kUpdateRunning:
      return MakeEvent(r.timestamp,
                       UpdateTaskRequiredResources{r.task, request, r.priority, r.production});
  }
  return std::nullopt;
}

TraceSchema TraceSchema::Default() {
  TraceSchema s;
  s.columns[TraceFileKind::kMachineEvents] = {
      {"timestamp", 0}, {"machine_id", 1}, {"event_type", 2}, {"cpu", 4}, {"memory", 5}};
  s.columns[TraceFileKind::kMachineAttributes] = {
      {"timestamp", 0}, {"machine_id", 1}, {"name", 2}, {"value", 3}, {"deleted", 4}};
  s.columns[TraceFileKind::kJobEvents] = {{"timestamp", 0}, {"job_id", 2}, {"event_type", 3}};
  s.columns[TraceFileKind::kTaskEvents] = {
      {"timestamp", 0}, {"job_id", 2},   {"task_index", 3},  {"machine_id", 4},
      {"event_type", 5}, {"priority", 8}, {"cpu_request", 9}, {"memory_request", 10}};
  s.columns[TraceFileKind::kTaskUsage] = {{"start_time", 0}, {"job_id", 2},   {"task_index", 3},
                                          {"machine_id", 4}, {"cpu_rate", 5}, {"memory", 6}};
  s.columns[TraceFileKind::kTaskConstraints] = {{"timestamp", 0}, {"job_id", 1},
                                                {"task_index", 2}, {"operator", 3},
                                                {"name", 4},      {"value", 5}};
  return s;
}

TraceSchema TraceSchema::FromJsonText(const std::string& text) {
  TraceSchema s = Default();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    if (doc.contains("columns")) {
      for (const auto& [kind_name, fields] : doc.at("columns").items()) {
        auto kind = ParseTraceFileKind(kind_name);
        if (!kind) throw ConfigError("unknown trace file kind " + kind_name);
        for (const auto& [field, col] : fields.items()) {
          s.columns[*kind][field] = col.get<int>();
        }
      }
    }
    s.production_priority = doc.value("production_priority", s.production_priority);
    if (doc.contains("time_offset_s")) {
      s.time_offset = Seconds(doc.at("time_offset_s").get<double>());
    }
    s.cost_model.node_memory_mb = doc.value("node_memory_mb", s.cost_model.node_memory_mb);
    s.cost_model.canonical_mb = doc.value("canonical_mb", s.cost_model.canonical_mb);
    if (doc.contains("profile")) {
      s.cost_model.profile_name = doc.at("profile").get<std::string>();
      s.cost_model.profile = lmdt::profile_for(s.cost_model.profile_name);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trace schema: ") + e.what());
  } catch (const LookupError& e) {
    throw ConfigError(std::string("trace schema: ") + e.what());
  }
  return s;
}

int TraceSchema::column(TraceFileKind k, const std::string& field) const {
  auto it = columns.find(k);
  if (it == columns.end()) return -1;
  auto f = it->second.find(field);
  return f == it->second.end() ? -1 : f->second;
}

void SplitCsv(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  std::size_t end = line.size();
  if (end && line[end - 1] == '\r') --end;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos || comma >= end) {
      out.emplace_back(line, start, end - start);
      break;
    }
    out.emplace_back(line, start, comma - start);
    start = comma + 1;
  }
}

LineReader::LineReader(std::vector<std::string> paths) : paths_(std::move(paths)) {}

LineReader::~LineReader() {
  if (gz_) gzclose(static_cast<gzFile>(gz_));
}

bool LineReader::open_next() {
  if (gz_) {
    gzclose(static_cast<gzFile>(gz_));
    gz_ = nullptr;
  }
  if (next_path_ >= paths_.size()) return false;
  current_path_ = paths_[next_path_++];
  line_no_ = 0;
  // gzopen reads uncompressed files transparently.
  gz_ = gzopen(current_path_.c_str(), "rb");
  if (!gz_) throw TraceError("cannot open trace file " + current_path_);
  gzbuffer(static_cast<gzFile>(gz_), 1 << 17);
  return true;
}

bool LineReader::next(std::string& line) {
  char buf[4096];
  while (true) {
    if (!gz_ && !open_next()) return false;
    line.clear();
    bool got = false;
    while (gzgets(static_cast<gzFile>(gz_), buf, sizeof(buf)) != nullptr) {
      got = true;
      line.append(buf);
      if (!line.empty() && line.back() == '\n') break;
    }
    if (got) {
      if (!line.empty() && line.back() == '\n') line.pop_back();
      ++line_no_;
      return true;
    }
    int err = 0;
    const char* msg = gzerror(static_cast<gzFile>(gz_), &err);
    if (err != Z_OK && err != Z_STREAM_END) {
      throw TraceError("read error in " + current_path_ + ": " + msg);
    }
    gzclose(static_cast<gzFile>(gz_));
    gz_ = nullptr;
  }
}

TraceFileParser::TraceFileParser(TraceFileKind kind, std::unique_ptr<LineReader> reader,
                                 TraceSchema schema, std::uint32_t source_index,
                                 std::shared_ptr<AnomalyLog> log)
    : kind_(kind),
      reader_(std::move(reader)),
      schema_(std::move(schema)),
      source_index_(source_index),
      log_(std::move(log)) {}

std::string TraceFileParser::name() const { return DirectoryName(kind_); }

const WorkloadEvent* TraceFileParser::peek() {
  fill();
  return ready_.empty() ? nullptr : &ready_.front();
}

void TraceFileParser::pop() {
  fill();
  if (!ready_.empty()) ready_.pop_front();
}

void TraceFileParser::fill() {
  std::string line;
  while (ready_.empty() && !exhausted_) {
    if (!reader_->next(line)) {
      exhausted_ = true;
      flush_constraints();
      break;
    }
    ++lines_;
    if (line.empty()) continue;
    parse_line(line);
  }
}

void TraceFileParser::corrupt(const std::string& why) {
  ++skipped_;
  if (log_) {
    log_->add({AnomalyKind::kCorruptRecord,
               std::string(DirectoryName(kind_)) + " " + reader_->current_file() + ":" +
                   std::to_string(reader_->line_number()) + ": " + why,
               1, 0});
  }
}

void TraceFileParser::emit(WorkloadEvent e) {
  e.source = source_index_;
  e.seq = seq_++;
  ++emitted_;
  ready_.push_back(std::move(e));
}

void TraceFileParser::flush_constraints() {
  if (pending_constraints_) {
    emit(std::move(*pending_constraints_));
    pending_constraints_.reset();
  }
}

void TraceFileParser::parse_line(const std::string& line) {
  thread_local std::vector<std::string> f;
  SplitCsv(line, f);
  auto field = [&](const char* name) -> const std::string* {
    int c = schema_.column(kind_, name);
    if (c < 0 || c >= static_cast<int>(f.size())) return nullptr;
    return &f[c];
  };
  auto required_int = [&](const char* name) -> std::optional<long long> {
    const std::string* s = field(name);
    if (!s) return std::nullopt;
    return ParseInt(*s);
  };
  auto optional_double = [&](const char* name, double fallback) -> std::optional<double> {
    const std::string* s = field(name);
    if (!s || s->empty()) return fallback;
    return ParseDouble(*s);
  };
  auto shift = [&](long long ts) -> SimTime {
    return ts > schema_.time_offset ? ts - schema_.time_offset : 0;
  };

  switch (kind_) {
    case TraceFileKind::kMachineEvents: {
      auto ts = required_int("timestamp");
      const std::string* id = field("machine_id");
      auto type = required_int("event_type");
      if (!ts || !id || id->empty() || !type) return corrupt("missing required field");
      if (*type == 1) {
        emit(MakeEvent(shift(*ts), RemoveNode{*id}));
        return;
      }
      if (*type != 0 && *type != 2) return corrupt("unknown machine event type");
      const std::string* cpu_s = field("cpu");
      const std::string* mem_s = field("memory");
      auto cpu = cpu_s ? ParseDouble(*cpu_s) : std::nullopt;
      auto mem = mem_s ? ParseDouble(*mem_s) : std::nullopt;
      if (!cpu || !mem || *cpu < 0 || *mem < 0) return corrupt("missing machine capacity");
      if (*type == 0) {
        model::NodeSpec n;
        n.id = *id;
        n.total = ResourceVector{*cpu, *mem};
        emit(MakeEvent(shift(*ts), AddNode{std::move(n)}));
      } else {
        emit(MakeEvent(shift(*ts), UpdateNodeTotalResources{*id, ResourceVector{*cpu, *mem}}));
      }
      return;
    }
    case TraceFileKind::kMachineAttributes: {
      auto ts = required_int("timestamp");
      const std::string* id = field("machine_id");
      const std::string* name = field("name");
      if (!ts || !id || id->empty() || !name || name->empty()) {
        return corrupt("missing required field");
      }
      const std::string* value = field("value");
      const std::string* deleted = field("deleted");
      if (deleted && *deleted == "1") {
        emit(MakeEvent(shift(*ts), RemoveNodeAttributes{*id, {*name}}));
      } else {
        emit(MakeEvent(shift(*ts), AddNodeAttributes{*id, {{*name, value ? *value : ""}}}));
      }
      return;
    }
    case TraceFileKind::kJobEvents: {
      // Parsed for linkage validation only.
      if (!required_int("timestamp") || !required_int("job_id")) {
        return corrupt("missing required field");
      }
      return;
    }
    case TraceFileKind::kTaskEvents: {
      auto ts = required_int("timestamp");
      auto job = required_int("job_id");
      auto index = required_int("task_index");
      auto type = required_int("event_type");
      if (!ts || !job || !index || !type) return corrupt("missing required field");
      auto cpu = optional_double("cpu_request", 0.0);
      auto mem = optional_double("memory_request", 0.0);
      auto prio_s = field("priority");
      std::optional<long long> prio = 0;
      if (prio_s && !prio_s->empty()) prio = ParseInt(*prio_s);
      if (!cpu || !mem || !prio || *cpu < 0 || *mem < 0) return corrupt("bad numeric field");
      TaskRecord r;
      r.timestamp = shift(*ts);
      r.task = std::to_string(*job) + "-" + std::to_string(*index);
      r.priority = static_cast<int>(*prio);
      r.production = r.priority >= schema_.production_priority;
      r.cpu_request = *cpu;
      r.memory_request = *mem;
      r.base_cost_mb = schema_.cost_model.cost_mb(0.0);
      if (*type < 0 || *type > static_cast<int>(TaskAction::kUpdateRunning)) {
        return corrupt("unknown task action " + std::to_string(*type));
      }
      if (auto e = map_task_action(static_cast<int>(*type), r, nullptr)) emit(std::move(*e));
      return;
    }
    case TraceFileKind::kTaskUsage: {
      auto ts = required_int("start_time");
      auto job = required_int("job_id");
      auto index = required_int("task_index");
      if (!ts || !job || !index) return corrupt("missing required field");
      auto cpu = optional_double("cpu_rate", 0.0);
      auto mem = optional_double("memory", 0.0);
      if (!cpu || !mem || *cpu < 0 || *mem < 0) return corrupt("bad numeric field");
      UpdateTaskUsedResources u;
      u.task = std::to_string(*job) + "-" + std::to_string(*index);
      u.used = ResourceVector{*cpu, *mem};
      u.migration_cost_mb = schema_.cost_model.cost_mb(*mem);
      const std::string* machine = field("machine_id");
      if (machine && !machine->empty()) u.machine = *machine;
      emit(MakeEvent(shift(*ts), std::move(u)));
      return;
    }
    case TraceFileKind::kTaskConstraints: {
      auto ts = required_int("timestamp");
      auto job = required_int("job_id");
      auto index = required_int("task_index");
      auto op = required_int("operator");
      const std::string* name = field("name");
      if (!ts || !job || !index || !op || !name || name->empty()) {
        return corrupt("missing required field");
      }
      if (*op < 0 || *op > 3) return corrupt("unknown constraint operator");
      const std::string* value = field("value");
      TaskConstraint c{static_cast<ConstraintOp>(*op), *name, value ? *value : ""};
      if (!IsWellFormed(c)) return corrupt("non-integer value for numeric constraint");
      const SimTime t = shift(*ts);
      const TaskId task = std::to_string(*job) + "-" + std::to_string(*index);
      if (pending_constraints_) {
        auto& p = std::get<UpdateTaskConstraints>(pending_constraints_->payload);
        if (pending_constraints_->timestamp == t && p.task == task) {
          p.constraints.push_back(std::move(c));
          return;
        }
        flush_constraints();
      }
      pending_constraints_ = MakeEvent(t, UpdateTaskConstraints{task, {std::move(c)}});
      return;
    }
  }
}

std::vector<WorkloadEvent> parse_trace_file(TraceFileKind kind, const std::string& path,
                                            const TraceSchema& schema,
                                            std::shared_ptr<AnomalyLog> log) {
  TraceFileParser p(kind, std::make_unique<LineReader>(std::vector<std::string>{path}), schema,
                    0, std::move(log));
  std::vector<WorkloadEvent> out;
  while (const WorkloadEvent* e = p.peek()) {
    out.push_back(*e);
    p.pop();
  }
  return out;
}

std::vector<std::unique_ptr<TraceFileParser>> OpenTraceDirectory(
    const std::string& dir, const TraceSchema& schema, std::shared_ptr<AnomalyLog> log) {
  if (!fs::is_directory(dir)) throw TraceError("trace directory not found: " + dir);
  std::vector<std::unique_ptr<TraceFileParser>> out;
  std::uint32_t index = 0;
  for (TraceFileKind kind : kAllKinds) {
    fs::path group = fs::path(dir) / DirectoryName(kind);
    if (!fs::is_directory(group)) continue;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(group)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && name.rfind("part-", 0) == 0) {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) continue;
    out.push_back(std::make_unique<TraceFileParser>(
        kind, std::make_unique<LineReader>(std::move(files)), schema, index++, log));
  }
  if (out.empty()) throw TraceError("no trace file groups under " + dir);
  return out;
}

}  // namespace cellsim::workload
