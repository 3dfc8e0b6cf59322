#include <gtest/gtest.h>

#include "cellsim/common/errors.h"
#include "cellsim/model/system_state.h"

namespace cellsim::model {
namespace {

TaskSpec MakeTask(const std::string& id, ResourceVector req, double cost, ResourceVector used = {}) {
  TaskSpec t;
  t.id = id;
  t.required = req;
  t.used = used.size() ? used : ResourceVector(req.size());
  t.migration_cost_mb = cost;
  return t;
}

SystemState TwoNodes() {
  std::vector<NodeSpec> nodes = {{"A", {10, 10}, {}}, {"B", {4, 4}, {}}};
  std::vector<TaskSpec> tasks = {MakeTask("1", {5, 3}, 10, {1, 1}), MakeTask("2", {4, 6}, 20, {2, 2}),
                                 MakeTask("3", {2, 1}, 30, {1, 1})};
  return SystemState(ResourceTypeCatalog::CpuMemory(), nodes, tasks,
                     Assignment({{"1", "A"}, {"2", "A"}, {"3", "B"}}));
}

TEST(ResourceVector, Arithmetic) {
  ResourceVector a{1, 2}, b{0.5, 3};
  EXPECT_EQ(a + b, (ResourceVector{1.5, 5}));
  EXPECT_EQ(a - b, (ResourceVector{0.5, -1}));
  EXPECT_EQ(a.scaled(2), (ResourceVector{2, 4}));
  EXPECT_TRUE(b.all_le(ResourceVector{1, 3}));
  EXPECT_FALSE((a - b).all_non_negative());
  EXPECT_TRUE(ResourceVector(3).is_zero());
}

TEST(ResourceVector, DimensionMismatchThrows) {
  ResourceVector a{1, 2}, b{1, 2, 3};
  EXPECT_THROW(a += b, DomainError);
  EXPECT_THROW((void)a.all_le(b), DomainError);
}

TEST(Catalog, IndexOf) {
  auto c = ResourceTypeCatalog::CpuMemory();
  EXPECT_EQ(c.dimension(), 2u);
  EXPECT_EQ(c.index_of("memory"), 1u);
  EXPECT_FALSE(c.index_of("disk").has_value());
}

TEST(SystemState, AvailableOnBothBases) {
  auto s = TwoNodes();
  EXPECT_EQ(available_resources(s, "A"), (ResourceVector{1, 1}));
  EXPECT_EQ(available_resources(s, "A", ResourceBasis::kUsed), (ResourceVector{7, 7}));
  EXPECT_EQ(available_resources(s, "B"), (ResourceVector{2, 3}));
}

TEST(SystemState, Stability) {
  auto s = TwoNodes();
  EXPECT_TRUE(is_system_stable(s));
  auto moved = apply_moves(s, {{"1", "B"}});
  EXPECT_FALSE(is_node_stable(moved, "B"));
  EXPECT_TRUE(is_node_stable(moved, "A"));
  EXPECT_FALSE(is_system_stable(moved));
  EXPECT_TRUE(is_system_stable(moved, ResourceBasis::kUsed));
}

TEST(SystemState, UnknownIdsThrow) {
  auto s = TwoNodes();
  EXPECT_THROW(s.node("Z"), LookupError);
  EXPECT_THROW(s.task("9"), LookupError);
  EXPECT_THROW(apply_moves(s, {{"1", "Z"}}), LookupError);
}

TEST(SystemState, RejectsUnassignedOrDuplicate) {
  std::vector<NodeSpec> nodes = {{"A", {1}, {}}};
  std::vector<TaskSpec> tasks = {MakeTask("1", {0.1}, 1)};
  EXPECT_ANY_THROW(SystemState(ResourceTypeCatalog({"cpu"}), nodes, tasks, Assignment()));
  EXPECT_ANY_THROW(SystemState(ResourceTypeCatalog({"cpu"}), {nodes[0], nodes[0]}, tasks,
                               Assignment(std::map<TaskId, NodeId>{{"1", "A"}})));
}

TEST(SystemState, NegativeDemandRejected) {
  std::vector<NodeSpec> nodes = {{"A", {1}, {}}};
  std::vector<TaskSpec> tasks = {MakeTask("1", {-0.1}, 1)};
  EXPECT_ANY_THROW(SystemState(ResourceTypeCatalog({"cpu"}), nodes, tasks, Assignment(std::map<TaskId, NodeId>{{"1", "A"}})));
}

TEST(Cost, MigrationAndTransformation) {
  auto s = TwoNodes();
  Assignment after = s.assignment();
  after.set("1", "B");
  after.set("3", "A");
  EXPECT_EQ(migration_cost(s.task("1"), s.assignment(), after), 10);
  EXPECT_EQ(migration_cost(s.task("2"), s.assignment(), after), 0);
  EXPECT_EQ(transformation_cost(s.assignment(), after, s.tasks()), 40);
  EXPECT_EQ(transformation_cost(s.assignment(), s.assignment(), s.tasks()), 0);
}

TEST(Cost, Neighbor) {
  auto s = TwoNodes();
  Assignment one = s.assignment(), two = s.assignment();
  one.set("1", "B");
  two.set("1", "B");
  two.set("2", "B");
  EXPECT_TRUE(is_neighbor(s.assignment(), one));
  EXPECT_FALSE(is_neighbor(s.assignment(), two));
  EXPECT_FALSE(is_neighbor(s.assignment(), s.assignment()));
}

TEST(SystemState, ResidentsFollowMoves) {
  auto s = apply_moves(TwoNodes(), {{"3", "A"}});
  EXPECT_EQ(s.tasks_on("A").size(), 3u);
  EXPECT_TRUE(s.tasks_on("B").empty());
}

}  // namespace
}  // namespace cellsim::model
