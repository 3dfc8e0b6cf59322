#ifndef CELLSIM_MODEL_SPECS_H_
#define CELLSIM_MODEL_SPECS_H_

#include <map>
#include <string>
#include <vector>

#include "cellsim/model/resource_vector.h"

namespace cellsim::model {

using NodeId = std::string;
using TaskId = std::string;
using AttributeMap = std::map<std::string, std::string>;

enum class ConstraintOp { kEqual, kNotEqual, kLessThan, kGreaterThan };

const char* ToString(ConstraintOp op);

struct TaskConstraint {
  ConstraintOp op = ConstraintOp::kEqual;
  std::string attribute;
  std::string value;

  bool operator==(const TaskConstraint&) const = default;
};

struct NodeSpec {
  NodeId id;
  ResourceVector total;
  AttributeMap attributes;

  bool operator==(const NodeSpec&) const = default;
};

struct TaskSpec {
  TaskId id;
  ResourceVector required;
  ResourceVector used;
  double migration_cost_mb = 1.0;
  int priority = 0;
  bool production = false;
  std::vector<TaskConstraint> constraints;
  bool unstarted = false;

  bool operator==(const TaskSpec&) const = default;
};

// Throws DomainError when a spec breaks its value invariants.
void Validate(const NodeSpec& node, std::size_t dimension);
void Validate(const TaskSpec& task, std::size_t dimension);

}  // namespace cellsim::model

#endif  // CELLSIM_MODEL_SPECS_H_
