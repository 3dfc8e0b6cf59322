#ifndef CELLSIM_WORKLOAD_TRACE_WRITER_H_
#define CELLSIM_WORKLOAD_TRACE_WRITER_H_

#include <string>
#include <vector>

#include "cellsim/workload/events.h"

namespace cellsim::workload {

// Writes events as a trace directory in the default column layout, one
// part file per group, with `time_offset` added to every timestamp so the
// parser's shift restores them. Node ids must be integers and task ids
// "<job>-<index>". Throws TraceError on I/O failure or unrepresentable ids.
void WriteTraceDirectory(const std::vector<WorkloadEvent>& events, const std::string& dir,
                         SimTime time_offset = 0);

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_TRACE_WRITER_H_
