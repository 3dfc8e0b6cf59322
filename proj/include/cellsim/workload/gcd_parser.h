#ifndef CELLSIM_WORKLOAD_GCD_PARSER_H_
#define CELLSIM_WORKLOAD_GCD_PARSER_H_

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cellsim/lmdt/lmdt.h"
#include "cellsim/workload/anomalies.h"
#include "cellsim/workload/events.h"

namespace cellsim::workload {

enum class TraceFileKind {
  kMachineEvents,
  kMachineAttributes,
  kJobEvents,
  kTaskEvents,
  kTaskUsage,
  kTaskConstraints,
};
const char* DirectoryName(TraceFileKind k);
std::optional<TraceFileKind> ParseTraceFileKind(const std::string& s);

enum class TaskAction {
  kSubmit = 0,
  kSchedule = 1,
  kEvict = 2,
  kFail = 3,
  kFinish = 4,
  kKill = 5,
  kLost = 6,
  kUpdatePending = 7,
  kUpdateRunning = 8,
};

// Fields of a task_events record needed to build an event.
struct TaskRecord {
  SimTime timestamp = 0;
  TaskId task;
  int priority = 0;
  bool production = false;
  double cpu_request = 0.0;
  double memory_request = 0.0;
  double base_cost_mb = 1.0;
};

// Maps a task_events action code to the workload event it produces.
// nullopt for SCHEDULE. Unknown codes add a CorruptRecord report to `log`
// (if given) and return nullopt.
std::optional<WorkloadEvent> map_task_action(int action_code, const TaskRecord& record,
                                             AnomalyLog* log = nullptr);

// Column positions per file kind. Defaults follow the public v2 layout.
struct TraceSchema {
  std::map<TraceFileKind, std::map<std::string, int>> columns;
  int production_priority = 9;
  SimTime time_offset = 600 * kMicrosPerSecond;
  lmdt::TraceCostModel cost_model;

  static TraceSchema Default();
  // Overrides from JSON: {"columns": {"task_events": {"priority": 8}},
  // "production_priority": 9, "time_offset_s": 600, "node_memory_mb": 65536,
  // "canonical_mb": 0, "profile": "apache"}.
  static TraceSchema FromJsonText(const std::string& text);
  int column(TraceFileKind k, const std::string& field) const;
};

// Line reader over plain or gzip text files; files are read in order.
class LineReader {
 public:
  explicit LineReader(std::vector<std::string> paths);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line);
  const std::string& current_file() const { return current_path_; }
  std::uint64_t line_number() const { return line_no_; }

 private:
  bool open_next();
  std::vector<std::string> paths_;
  std::size_t next_path_ = 0;
  void* gz_ = nullptr;
  std::string current_path_;
  std::uint64_t line_no_ = 0;
};

// Streams the events of one file group. Malformed lines are skipped and
// reported to `log` as CorruptRecord.
class TraceFileParser : public EventSource {
 public:
  TraceFileParser(TraceFileKind kind, std::unique_ptr<LineReader> reader, TraceSchema schema,
                  std::uint32_t source_index, std::shared_ptr<AnomalyLog> log);

  const WorkloadEvent* peek() override;
  void pop() override;
  std::string name() const override;

  std::uint64_t lines_read() const { return lines_; }
  std::uint64_t lines_skipped() const { return skipped_; }
  std::uint64_t events_emitted() const { return emitted_; }

 private:
  void fill();
  void parse_line(const std::string& line);
  void corrupt(const std::string& why);
  void emit(WorkloadEvent e);
  void flush_constraints();

  TraceFileKind kind_;
  std::unique_ptr<LineReader> reader_;
  TraceSchema schema_;
  std::uint32_t source_index_;
  std::shared_ptr<AnomalyLog> log_;
  std::deque<WorkloadEvent> ready_;
  std::optional<WorkloadEvent> pending_constraints_;
  bool exhausted_ = false;
  std::uint64_t lines_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint64_t seq_ = 0;
};

// Parses a whole stream of CSV text, mainly for tests.
std::vector<WorkloadEvent> parse_trace_file(TraceFileKind kind, const std::string& path,
                                            const TraceSchema& schema,
                                            std::shared_ptr<AnomalyLog> log);

// Opens every present file group under a trace directory
// (machine_events/part-*.csv[.gz], ...). Sources are ordered by kind.
std::vector<std::unique_ptr<TraceFileParser>> OpenTraceDirectory(
    const std::string& dir, const TraceSchema& schema, std::shared_ptr<AnomalyLog> log);

// Splits one CSV line (no quoting in the trace format).
void SplitCsv(const std::string& line, std::vector<std::string>& out);

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_GCD_PARSER_H_
