#include "cellsim/workload/trace_writer.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

#include "cellsim/common/errors.h"
#include "cellsim/workload/gcd_parser.h"

namespace cellsim::workload {

namespace fs = std::filesystem;

namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::pair<std::string, std::string> SplitTaskId(const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == id.size()) {
    throw TraceError("task id not in <job>-<index> form: " + id);
  }
  return {id.substr(0, dash), id.substr(dash + 1)};
}

}  // namespace

void WriteTraceDirectory(const std::vector<WorkloadEvent>& events, const std::string& dir,
                         SimTime time_offset) {
  std::map<TraceFileKind, std::unique_ptr<std::ofstream>> files;
  auto out = [&](TraceFileKind k) -> std::ofstream& {
    auto& f = files[k];
    if (!f) {
      const fs::path group = fs::path(dir) / DirectoryName(k);
      fs::create_directories(group);
      f = std::make_unique<std::ofstream>(group / "part-00000-of-00001.csv");
      if (!*f) throw TraceError("cannot write " + group.string());
    }
    return *f;
  };
  for (const auto& e : events) {
    const std::string ts = std::to_string(e.timestamp + (e.timestamp > 0 ? time_offset : 0));
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, AddNode>) {
            out(TraceFileKind::kMachineEvents) << ts << ',' << p.node.id << ",0,,"
                                               << Num(p.node.total[0]) << ','
                                               << Num(p.node.total[1]) << '\n';
            for (const auto& [k, v] : p.node.attributes) {
              out(TraceFileKind::kMachineAttributes) << ts << ',' << p.node.id << ',' << k << ','
                                                     << v << ",0\n";
            }
          } else if constexpr (std::is_same_v<T, RemoveNode>) {
            out(TraceFileKind::kMachineEvents) << ts << ',' << p.node << ",1,,,\n";
          } else if constexpr (std::is_same_v<T, UpdateNodeTotalResources>) {
            out(TraceFileKind::kMachineEvents) << ts << ',' << p.node << ",2,,"
                                               << Num(p.total[0]) << ',' << Num(p.total[1])
                                               << '\n';
          } else if constexpr (std::is_same_v<T, AddNodeAttributes>) {
            for (const auto& [k, v] : p.attributes) {
              out(TraceFileKind::kMachineAttributes) << ts << ',' << p.node << ',' << k << ','
                                                     << v << ",0\n";
            }
          } else if constexpr (std::is_same_v<T, RemoveNodeAttributes>) {
            for (const auto& k : p.names) {
              out(TraceFileKind::kMachineAttributes) << ts << ',' << p.node << ',' << k
                                                     << ",,1\n";
            }
          } else if constexpr (std::is_same_v<T, AddTask>) {
            auto [job, idx] = SplitTaskId(p.task.id);
            out(TraceFileKind::kTaskEvents) << ts << ",," << job << ',' << idx << ",,0,user,0,"
                                            << p.task.priority << ',' << Num(p.task.required[0])
                                            << ',' << Num(p.task.required[1]) << ",,\n";
          } else if constexpr (std::is_same_v<T, RemoveTask>) {
            auto [job, idx] = SplitTaskId(p.task);
            out(TraceFileKind::kTaskEvents) << ts << ",," << job << ',' << idx
                                            << ",,4,user,0,,,,,\n";
          } else if constexpr (std::is_same_v<T, UpdateTaskRequiredResources>) {
            auto [job, idx] = SplitTaskId(p.task);
            out(TraceFileKind::kTaskEvents) << ts << ",," << job << ',' << idx << ",,8,user,0,"
                                            << p.priority << ',' << Num(p.required[0]) << ','
                                            << Num(p.required[1]) << ",,\n";
          } else if constexpr (std::is_same_v<T, UpdateTaskUsedResources>) {
            auto [job, idx] = SplitTaskId(p.task);
            out(TraceFileKind::kTaskUsage) << ts << ",," << job << ',' << idx << ','
                                           << p.machine.value_or("") << ',' << Num(p.used[0])
                                           << ',' << Num(p.used[1]) << '\n';
          } else if constexpr (std::is_same_v<T, UpdateTaskConstraints>) {
            auto [job, idx] = SplitTaskId(p.task);
            for (const auto& c : p.constraints) {
              out(TraceFileKind::kTaskConstraints) << ts << ',' << job << ',' << idx << ','
                                                   << static_cast<int>(c.op) << ','
                                                   << c.attribute << ',' << c.value << '\n';
            }
          }
        },
        e.payload);
  }
  for (auto& [k, f] : files) {
    f->flush();
    if (!*f) throw TraceError("write failed for " + std::string(DirectoryName(k)));
  }
}

}  // namespace cellsim::workload
