#include "cellsim/workload/window.h"

#include <algorithm>

namespace cellsim::workload {

EventBatch collect_window(const std::vector<EventSource*>& sources, SimTime window_start,
                          SimTime window_end, AnomalyLog* log) {
  EventBatch batch;
  batch.window_start = window_start;
  batch.window_end = window_end;
  std::uint64_t late = 0;
  bool all_done = true;
  for (EventSource* s : sources) {
    while (const WorkloadEvent* e = s->peek()) {
      if (e->timestamp >= window_end) break;
      if (e->timestamp < window_start) {
        ++late;
      } else {
        batch.events.push_back(*e);
      }
      s->pop();
    }
    if (s->peek() != nullptr) all_done = false;
  }
  std::sort(batch.events.begin(), batch.events.end(), EventLess);
  batch.end_of_trace = all_done;
  if (late && log) {
    log->add({AnomalyKind::kCorruptRecord, "events older than their window dropped", late,
              window_start});
  }
  return batch;
}

PrefetchSource::PrefetchSource(std::unique_ptr<EventSource> inner, SimTime horizon,
                               std::size_t max_events)
    : inner_(std::move(inner)), horizon_(horizon), max_events_(max_events) {
  worker_ = std::thread([this] { run(); });
}

PrefetchSource::~PrefetchSource() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

std::string PrefetchSource::name() const { return inner_->name(); }

bool PrefetchSource::full_locked() const {
  if (buffer_.size() >= max_events_) return true;
  return !buffer_.empty() && buffer_.back().timestamp - buffer_.front().timestamp >= horizon_;
}

void PrefetchSource::run() {
  try {
    while (true) {
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return stop_ || !full_locked(); });
        if (stop_) return;
      }
      // The inner source is touched only by this thread.
      const WorkloadEvent* e = inner_->peek();
      if (!e) break;
      WorkloadEvent copy = *e;
      inner_->pop();
      {
        std::lock_guard<std::mutex> lock(mu_);
        buffer_.push_back(std::move(copy));
      }
      cv_.notify_all();
    }
  } catch (...) {
    std::lock_guard<std::mutex> lock(mu_);
    error_ = std::current_exception();
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    done_ = true;
  }
  cv_.notify_all();
}

const WorkloadEvent* PrefetchSource::peek() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return !buffer_.empty() || done_; });
  if (buffer_.empty() && error_) std::rethrow_exception(error_);
  // The front element stays valid until pop(); the worker only appends.
  return buffer_.empty() ? nullptr : &buffer_.front();
}

void PrefetchSource::pop() {
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return !buffer_.empty() || done_; });
    if (!buffer_.empty()) buffer_.pop_front();
  }
  cv_.notify_all();
}

std::size_t PrefetchSource::buffered() const {
  std::lock_guard<std::mutex> lock(mu_);
  return buffer_.size();
}

}  // namespace cellsim::workload
