#ifndef CELLSIM_WORKLOAD_CONSTRAINTS_H_
#define CELLSIM_WORKLOAD_CONSTRAINTS_H_

#include <optional>
#include <string>
#include <vector>

#include "cellsim/model/specs.h"

namespace cellsim::workload {

using model::AttributeMap;
using model::ConstraintOp;
using model::TaskConstraint;

bool check_constraint(const TaskConstraint& c, const AttributeMap& attrs);
bool matches_constraints(const std::vector<TaskConstraint>& cs, const AttributeMap& attrs);
bool matches_node(const model::TaskSpec& task, const model::NodeSpec& node);

// Parses a whole-string base-10 integer; nullopt for anything else.
std::optional<long long> ParseInteger(const std::string& s);

// Numeric operators need an integer constraint value.
bool IsWellFormed(const TaskConstraint& c);

}  // namespace cellsim::workload

#endif  // CELLSIM_WORKLOAD_CONSTRAINTS_H_
