#ifndef CELLSIM_WORKLOAD_SYNTH_H_
#define CELLSIM_WORKLOAD_SYNTH_H_

#include <cstdint>
#include <memory>
#include <deque>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellsim/common/rng.h"
#include "cellsim/lmdt/lmdt.h"
#include "cellsim/workload/events.h"

namespace cellsim::workload {

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct NodeClass {
  double cpu = 1.0;
  double memory = 1.0;
  double weight = 1.0;
};

struct TaskShape {
  Range cpu;           // required CPU (normalised)
  Range memory;        // required memory (normalised)
  Range usage_factor;  // used / required
};

struct UsageBurst {
  double at_minute = 0.0;
  double task_fraction = 0.0;
  double factor = 1.0;
};

// Declarative synthetic workload description. JSON keys match field names.
struct SynthConfig {
  std::uint64_t seed = 1;
  int node_count = 100;
  std::vector<NodeClass> node_classes{{0.5, 0.5, 0.5}, {1.0, 1.0, 0.3}, {0.5, 0.25, 0.2}};
  double arm_fraction = 0.1;
  double external_ip_fraction = 0.3;
  int kernel_versions = 5;

  int initial_tasks = 0;
  double task_arrival_rate = 0.0;  // tasks per simulated minute
  double duration_minutes = 60.0;
  double batch_fraction = 0.8;
  Range batch_duration_minutes{12.0, 20.0};
  Range service_duration_minutes{240.0, 2880.0};
  TaskShape batch{{0.005, 0.03}, {0.005, 0.03}, {0.3, 0.9}};
  TaskShape service{{0.02, 0.08}, {0.02, 0.08}, {0.4, 0.9}};
  double usage_jitter = 0.05;
  double usage_period_s = 300.0;
  double constraint_rate = 0.05;
  double production_fraction = 0.2;
  std::vector<UsageBurst> bursts;
  // Reference placer overcommit on required resources (recorded placements).
  double placement_overcommit = 1.0;
  bool stagger_initial_lifetimes = true;
  lmdt::TraceCostModel cost_model;

  // Throws ConfigError on invalid parameters.
  void validate() const;
  static SynthConfig FromJson(const nlohmann::json& j);
  static SynthConfig FromFile(const std::string& path);
  nlohmann::json to_json() const;
};

// Deterministic event stream for a SynthConfig. Node events come first at
// time zero; tasks follow in time order with constraints (when drawn) at
// their submission time, periodic usage reports tagged with a recorded
// placement, and removal when their duration ends inside the horizon.
class SynthSource : public EventSource {
 public:
  explicit SynthSource(SynthConfig cfg, std::uint32_t source_index = 0);

  const WorkloadEvent* peek() override;
  void pop() override;
  std::string name() const override { return "synthetic"; }

  std::uint64_t batch_tasks() const { return batch_tasks_; }
  std::uint64_t service_tasks() const { return service_tasks_; }

 private:
  enum class Action { kSubmit, kUsage, kEnd, kBurst, kArrival };
  struct Pending {
    SimTime at;
    std::uint64_t order;
    Action action;
    std::uint32_t task;
    bool operator>(const Pending& o) const {
      return at != o.at ? at > o.at : order > o.order;
    }
  };
  struct GenTask {
    std::string id;
    model::ResourceVector required;
    model::ResourceVector factor;
    std::vector<model::TaskConstraint> constraints;
    SimTime end = 0;
    std::int32_t node = -1;
    bool live = false;
    bool started = false;
    bool batch = false;
    double burst = 1.0;
  };

  void schedule(SimTime at, Action a, std::uint32_t task);
  void step();
  void emit(SimTime at, EventPayload p);
  std::uint32_t new_task(SimTime at, bool initial = false);
  void start_task(std::uint32_t t);
  void emit_usage(SimTime at, std::uint32_t t);
  double draw(const Range& r);

  SynthConfig cfg_;
  std::uint32_t source_index_;
  Rng rng_;
  SimTime horizon_;
  std::vector<model::NodeSpec> nodes_;
  std::vector<model::ResourceVector> node_required_;
  std::vector<GenTask> tasks_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>> queue_;
  std::deque<WorkloadEvent> ready_;
  std::uint64_t order_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t batch_tasks_ = 0;
  std::uint64_t service_tasks_ = 0;
  bool nodes_emitted_ = false;
};

// Materialises the whole stream.
std::vector<WorkloadEvent> synth_generate(const SynthConfig& cfg);

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_SYNTH_H_
