#include "cellsim/workload/constraints.h"

#include <charconv>

namespace cellsim::workload {

std::optional<long long> ParseInteger(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

bool IsWellFormed(const TaskConstraint& c) {
  if (c.op == ConstraintOp::kLessThan || c.op == ConstraintOp::kGreaterThan) {
    return ParseInteger(c.value).has_value();
  }
  return true;
}

bool check_constraint(const TaskConstraint& c, const AttributeMap& attrs) {
  auto it = attrs.find(c.attribute);
  const bool present = it != attrs.end();
  // An empty attribute value counts as "not set".
  const bool set = present && !it->second.empty();
  switch (c.op) {
    case ConstraintOp::kEqual:
      if (c.value.empty()) return !set;
      return set && it->second == c.value;
    case ConstraintOp::kNotEqual:
      if (c.value.empty()) return set;
      return !set || it->second != c.value;
    case ConstraintOp::kLessThan: {
      if (!set) return true;
      auto limit = ParseInteger(c.value);
      auto actual = ParseInteger(it->second);
      return limit && actual && *actual < *limit;
    }
    case ConstraintOp::kGreaterThan: {
      if (!set) return false;
      auto limit = ParseInteger(c.value);
      auto actual = ParseInteger(it->second);
      return limit && actual && *actual > *limit;
    }
  }
  return false;
}

bool matches_constraints(const std::vector<TaskConstraint>& cs, const AttributeMap& attrs) {
  for (const auto& c : cs) {
    if (!check_constraint(c, attrs)) return false;
  }
  return true;
}

bool matches_node(const model::TaskSpec& task, const model::NodeSpec& node) {
  return matches_constraints(task.constraints, node.attributes);
}

}  // namespace cellsim::workload
