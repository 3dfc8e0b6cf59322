#include "cellsim/masb/messages.h"

#include <cstdio>

#include "cellsim/common/errors.h"

namespace cellsim::masb {

using nlohmann::json;
using workload::ResourceVectorFromJson;
using workload::ToJson;

namespace {

constexpr MessageKind kAllKinds[] = {
    MessageKind::kGetCandidateNodesRequest,
    MessageKind::kGetCandidateNodesResponse,
    MessageKind::kTaskMigrationRequest,
    MessageKind::kTaskMigrationAcceptanceResponse,
    MessageKind::kTaskMigrationRejectionResponse,
    MessageKind::kTaskMigrationProcessRequest,
    MessageKind::kTaskMigrationProcessConfirmationResponse,
    MessageKind::kTaskMigrationProcessErrorResponse,
    MessageKind::kNodeStatusReport,
    MessageKind::kBrokerCacheSync,
    MessageKind::kSubmitTask,
};

json RefToJson(const AgentRef& r) {
  return json::array({static_cast<int>(r.kind), r.index});
}

AgentRef RefFromJson(const json& j) {
  return {static_cast<AgentRef::Kind>(j.at(0).get<int>()), j.at(1).get<std::uint32_t>()};
}

json AttrsToJson(const std::shared_ptr<const model::AttributeMap>& a) {
  return a ? json(*a) : json(nullptr);
}

std::shared_ptr<const model::AttributeMap> AttrsFromJson(const json& j) {
  if (j.is_null()) return nullptr;
  return std::make_shared<const model::AttributeMap>(j.get<model::AttributeMap>());
}

}  // namespace

const char* ToString(MessageKind k) {
  switch (k) {
    case MessageKind::kGetCandidateNodesRequest: return "GetCandidateNodesRequest";
    case MessageKind::kGetCandidateNodesResponse: return "GetCandidateNodesResponse";
    case MessageKind::kTaskMigrationRequest: return "TaskMigrationRequest";
    case MessageKind::kTaskMigrationAcceptanceResponse: return "TaskMigrationAcceptanceResponse";
    case MessageKind::kTaskMigrationRejectionResponse: return "TaskMigrationRejectionResponse";
    case MessageKind::kTaskMigrationProcessRequest: return "TaskMigrationProcessRequest";
    case MessageKind::kTaskMigrationProcessConfirmationResponse:
      return "TaskMigrationProcessConfirmationResponse";
    case MessageKind::kTaskMigrationProcessErrorResponse:
      return "TaskMigrationProcessErrorResponse";
    case MessageKind::kNodeStatusReport: return "NodeStatusReport";
    case MessageKind::kBrokerCacheSync: return "BrokerCacheSync";
    case MessageKind::kSubmitTask: return "SubmitTask";
  }
  return "?";
}

MessageKind ParseMessageKind(const std::string& s) {
  for (auto k : kAllKinds) {
    if (s == ToString(k)) return k;
  }
  throw DomainError("unknown message kind " + s);
}

std::string FormatRecommendation(const CandidateNodeRecommendation& r) {
  std::string out = "CandidateNodeRecommendation[nodeId=" + r.node_id + ",nodeAvailableResources=[";
  char buf[64];
  for (std::size_t i = 0; i < r.available.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.10f", i ? "," : "", r.available[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "],fitnessValue=%.12f,forceMigration=%s]", r.fitness,
                r.forced ? "true" : "false");
  return out + buf;
}

json ToJson(const NodeStats& s) {
  return {{"total", ToJson(s.total)},
          {"available", ToJson(s.available)},
          {"production_required", ToJson(s.production_required)},
          {"tasks", s.tasks}};
}

NodeStats NodeStatsFromJson(const json& j) {
  NodeStats s;
  s.total = ResourceVectorFromJson(j.at("total"));
  s.available = ResourceVectorFromJson(j.at("available"));
  s.production_required = ResourceVectorFromJson(j.at("production_required"));
  s.tasks = j.at("tasks").get<std::uint32_t>();
  return s;
}

json ToJson(const CandidateNodeRecommendation& r) {
  return {{"node", r.node},       {"node_id", r.node_id}, {"available", ToJson(r.available)},
          {"fitness", r.fitness}, {"forced", r.forced},   {"created_at", r.created_at}};
}

CandidateNodeRecommendation RecommendationFromJson(const json& j) {
  CandidateNodeRecommendation r;
  r.node = j.at("node").get<NodeIndex>();
  r.node_id = j.at("node_id").get<std::string>();
  r.available = ResourceVectorFromJson(j.at("available"));
  r.fitness = j.at("fitness").get<double>();
  r.forced = j.at("forced").get<bool>();
  r.created_at = j.at("created_at").get<SimTime>();
  return r;
}

json ToJson(const BrokerCacheEntry& e) {
  return {{"node", e.node},
          {"id", e.id},
          {"stats", ToJson(e.stats)},
          {"attributes", AttrsToJson(e.attributes)},
          {"last_update", e.last_update}};
}

BrokerCacheEntry CacheEntryFromJson(const json& j) {
  BrokerCacheEntry e;
  e.node = j.at("node").get<NodeIndex>();
  e.id = j.at("id").get<std::string>();
  e.stats = NodeStatsFromJson(j.at("stats"));
  e.attributes = AttrsFromJson(j.at("attributes"));
  e.last_update = j.at("last_update").get<SimTime>();
  return e;
}

json ToJson(const Message& m) {
  json j = {{"kind", ToString(m.kind)},
            {"sender", RefToJson(m.sender)},
            {"recipient", RefToJson(m.recipient)},
            {"correlation", m.correlation},
            {"sent_at", m.sent_at},
            {"task", m.task},
            {"source", m.source},
            {"forced", m.forced},
            {"recommended_at", m.recommended_at},
            {"unschedulable", m.unschedulable},
            {"stats", ToJson(m.stats)},
            {"attributes", AttrsToJson(m.attributes)}};
  j["task_spec"] = m.task_spec ? ToJson(*m.task_spec) : json(nullptr);
  json recs = json::array();
  for (const auto& r : m.recommendations) recs.push_back(ToJson(r));
  j["recommendations"] = std::move(recs);
  json cache = json::array();
  for (const auto& e : m.cache_entries) cache.push_back(ToJson(e));
  j["cache_entries"] = std::move(cache);
  return j;
}

Message MessageFromJson(const json& j) {
  Message m;
  m.kind = ParseMessageKind(j.at("kind").get<std::string>());
  m.sender = RefFromJson(j.at("sender"));
  m.recipient = RefFromJson(j.at("recipient"));
  m.correlation = j.at("correlation").get<std::uint64_t>();
  m.sent_at = j.at("sent_at").get<SimTime>();
  m.task = j.at("task").get<TaskIndex>();
  m.source = j.at("source").get<NodeIndex>();
  m.forced = j.at("forced").get<bool>();
  m.recommended_at = j.value("recommended_at", SimTime{0});
  m.unschedulable = j.at("unschedulable").get<bool>();
  m.stats = NodeStatsFromJson(j.at("stats"));
  m.attributes = AttrsFromJson(j.at("attributes"));
  if (!j.at("task_spec").is_null()) {
    m.task_spec = std::make_shared<const model::TaskSpec>(
        workload::TaskSpecFromJson(j.at("task_spec")));
  }
  for (const auto& r : j.at("recommendations")) m.recommendations.push_back(RecommendationFromJson(r));
  for (const auto& e : j.at("cache_entries")) m.cache_entries.push_back(CacheEntryFromJson(e));
  return m;
}

}  // namespace cellsim::masb
