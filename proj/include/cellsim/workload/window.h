#ifndef CELLSIM_WORKLOAD_WINDOW_H_
#define CELLSIM_WORKLOAD_WINDOW_H_

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "cellsim/workload/anomalies.h"
#include "cellsim/workload/events.h"

namespace cellsim::workload {

// Pulls every event with timestamp < window_end from each source and merges
// them into one batch ordered by EventLess. Events older than window_start
// (a source running backwards) are dropped and reported as CorruptRecord.
// end_of_trace is set once every source is exhausted.
EventBatch collect_window(const std::vector<EventSource*>& sources, SimTime window_start,
                          SimTime window_end, AnomalyLog* log = nullptr);

// Reads ahead on a worker thread. The buffer is kept until it spans
// `horizon` of simulated time or holds `max_events`; peek() blocks until the
// worker has produced the next event or the inner source ends.
class PrefetchSource : public EventSource {
 public:
  PrefetchSource(std::unique_ptr<EventSource> inner, SimTime horizon = 30 * kMicrosPerMinute,
                 std::size_t max_events = 1'000'000);
  ~PrefetchSource() override;

  const WorkloadEvent* peek() override;
  void pop() override;
  std::string name() const override;

  std::size_t buffered() const;

 private:
  void run();
  bool full_locked() const;

  std::unique_ptr<EventSource> inner_;
  SimTime horizon_;
  std::size_t max_events_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WorkloadEvent> buffer_;
  bool done_ = false;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_WINDOW_H_
