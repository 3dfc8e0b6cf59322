#include "cellsim/model/specs.h"

#include "cellsim/common/errors.h"

namespace cellsim::model {

const char* ToString(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::kEqual: return "EQUAL";
    case ConstraintOp::kNotEqual: return "NOT_EQUAL";
    case ConstraintOp::kLessThan: return "LESS_THAN";
    case ConstraintOp::kGreaterThan: return "GREATER_THAN";
  }
  return "?";
}

void Validate(const NodeSpec& node, std::size_t dimension) {
  if (node.total.size() != dimension) {
    throw DomainError("node " + node.id + ": total has wrong dimension");
  }
  if (!node.total.all_non_negative()) {
    throw DomainError("node " + node.id + ": negative capacity");
  }
}

void Validate(const TaskSpec& task, std::size_t dimension) {
  if (task.required.size() != dimension || task.used.size() != dimension) {
    throw DomainError("task " + task.id + ": vector has wrong dimension");
  }
  if (!task.required.all_non_negative() || !task.used.all_non_negative()) {
    throw DomainError("task " + task.id + ": negative resource value");
  }
  if (!(task.migration_cost_mb > 0.0)) {
    throw DomainError("task " + task.id + ": migration cost must be positive");
  }
  if (task.unstarted && !task.used.is_zero()) {
    throw DomainError("task " + task.id + ": unstarted task reports usage");
  }
}

}  // namespace cellsim::model
