#ifndef CELLSIM_MASB_MESSAGES_H_
#define CELLSIM_MASB_MESSAGES_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellsim/common/sim_time.h"
#include "cellsim/model/specs.h"
#include "cellsim/workload/cell.h"

namespace cellsim::masb {

using workload::NodeIndex;
using workload::TaskIndex;
using workload::kNoIndex;

// The eight negotiation messages plus three housekeeping kinds: node status
// reports, broker-to-broker cache gossip and harness task submission.
enum class MessageKind : std::uint8_t {
  kGetCandidateNodesRequest,
  kGetCandidateNodesResponse,
  kTaskMigrationRequest,
  kTaskMigrationAcceptanceResponse,
  kTaskMigrationRejectionResponse,
  kTaskMigrationProcessRequest,
  kTaskMigrationProcessConfirmationResponse,
  kTaskMigrationProcessErrorResponse,
  kNodeStatusReport,
  kBrokerCacheSync,
  kSubmitTask,
};
const char* ToString(MessageKind k);
MessageKind ParseMessageKind(const std::string& s);

struct AgentRef {
  enum class Kind : std::uint8_t { kNode, kBroker, kHarness };
  Kind kind = Kind::kHarness;
  std::uint32_t index = 0;

  static AgentRef Node(NodeIndex n) { return {Kind::kNode, n}; }
  static AgentRef Broker(std::uint32_t b) { return {Kind::kBroker, b}; }
  static AgentRef Harness() { return {Kind::kHarness, 0}; }
  bool operator==(const AgentRef&) const = default;
};

// Live resource view of one node as its agent reports it. `available` is
// total minus admitted load minus incoming reservations.
struct NodeStats {
  model::ResourceVector total;
  model::ResourceVector available;
  model::ResourceVector production_required;
  std::uint32_t tasks = 0;
};

struct CandidateNodeRecommendation {
  NodeIndex node = kNoIndex;
  model::NodeId node_id;
  model::ResourceVector available;
  double fitness = 0.0;
  bool forced = false;
  SimTime created_at = 0;
};

// Log layout used by the sampled decision records.
std::string FormatRecommendation(const CandidateNodeRecommendation& r);

struct BrokerCacheEntry {
  NodeIndex node = kNoIndex;
  model::NodeId id;
  NodeStats stats;
  std::shared_ptr<const model::AttributeMap> attributes;
  SimTime last_update = 0;
};

struct Message {
  MessageKind kind = MessageKind::kNodeStatusReport;
  AgentRef sender;
  AgentRef recipient;
  std::uint64_t correlation = 0;
  SimTime sent_at = 0;

  TaskIndex task = kNoIndex;
  std::shared_ptr<const model::TaskSpec> task_spec;
  NodeIndex source = kNoIndex;  // current host of the task; none for new tasks
  bool forced = false;
  SimTime recommended_at = 0;  // quote time of the recommendation a process request acts on
  bool unschedulable = false;
  NodeStats stats;
  std::vector<CandidateNodeRecommendation> recommendations;
  std::vector<BrokerCacheEntry> cache_entries;
  std::shared_ptr<const model::AttributeMap> attributes;
};

nlohmann::json ToJson(const NodeStats& s);
NodeStats NodeStatsFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const CandidateNodeRecommendation& r);
CandidateNodeRecommendation RecommendationFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const BrokerCacheEntry& e);
BrokerCacheEntry CacheEntryFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const Message& m);
Message MessageFromJson(const nlohmann::json& j);

}  // namespace cellsim::masb

#endif  // CELLSIM_MASB_MESSAGES_H_
