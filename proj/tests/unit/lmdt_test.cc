#include <gtest/gtest.h>

#include <cmath>

#include "cellsim/common/errors.h"
#include "cellsim/lmdt/lmdt.h"

namespace cellsim::lmdt {
namespace {

TEST(Lmdt, FormulaAgainstDirectEvaluation) {
  const MigrationProfile p{145.0, 0.01072, 9.6};
  for (double am : {0.0, 1.0, 50.0, 229.0, 900.0}) {
    EXPECT_DOUBLE_EQ(lmdt_estimate(p, am), 145.0 + 9.6 * std::exp(0.01072 * am));
  }
}

TEST(Lmdt, IdleProfileIsFlat) {
  const auto& idle = profile_for("idle");
  EXPECT_EQ(idle.af, 0.0);
  EXPECT_EQ(lmdt_estimate(idle, 0), lmdt_estimate(idle, 800));
  EXPECT_EQ(lmdt_estimate(idle, 0), 90 + 9.6);
}

TEST(Lmdt, AllocatorProfiles) {
  EXPECT_EQ(profile_for("vm-allocator-1").af, 0.00620);
  EXPECT_EQ(profile_for("vm-allocator-2").af, 0.00676);
  EXPECT_EQ(profile_for("vm-allocator-3").af, 0.00714);
  EXPECT_EQ(profile_for("vm-allocator-3").cmdt_mb, 213);
}

TEST(Lmdt, UnknownProfileThrows) { EXPECT_THROW(profile_for("nginx"), LookupError); }

TEST(Lmdt, NegativeMemoryRejected) {
  EXPECT_THROW(lmdt_estimate(profile_for("apache"), -1), DomainError);
}

TEST(Lmdt, ApplicationMemory) {
  EXPECT_EQ(application_memory(500, 120), 380);
  EXPECT_THROW(application_memory(100, 120), DomainError);
}

TEST(Catalog, RegisterAndJson) {
  ProfileCatalog cat;
  cat.load_json_text(R"({"redis": {"cmdt_mb": 100, "af": 0.002}})");
  EXPECT_EQ(cat.profile_for("redis").cmdt_mb, 100);
  EXPECT_EQ(cat.profile_for("redis").mf_mb, kDefaultMigrationFactorMb);
  EXPECT_THROW(cat.register_profile("bad", MigrationProfile{-1, 0, 9.6}), DomainError);
}

TEST(Catalog, CustomMigrationFactor) {
  ProfileCatalog cat(12.0);
  EXPECT_EQ(cat.profile_for("apache").mf_mb, 12.0);
  EXPECT_EQ(lmdt_estimate(cat.profile_for("apache"), 0), 175 + 12.0);
}

TEST(TraceCost, ScalesNormalisedMemory) {
  TraceCostModel m;
  const double am = 0.01 * 64 * 1024;
  EXPECT_DOUBLE_EQ(m.cost_mb(0.01), 175 + 9.6 * std::exp(0.00682 * am));
  EXPECT_LT(m.cost_mb(0.001), m.cost_mb(0.002));
}

}  // namespace
}  // namespace cellsim::lmdt
