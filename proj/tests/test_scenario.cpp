#include <gtest/gtest.h>

#include <cmath>

#include "uavsim/error.hpp"
#include "uavsim/scenario.hpp"

using namespace uavsim;

TEST(UserDistance, Examples) {
  EXPECT_DOUBLE_EQ(user_distance({0, 0, 50}, {0, 0, 0}), 50.0);
  EXPECT_DOUBLE_EQ(user_distance({30, 40, 0}, {0, 0, 0}), 50.0);
  EXPECT_NEAR(user_distance({100, 200, 50}, {40, 120, 0}), std::sqrt(12500.0), 1e-12);
  EXPECT_NEAR(user_distance({100, 200, 50}, {40, 120, 0}), 111.803398874989, 1e-9);
}

TEST(UserDistance, SymmetricAndTriangle) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Vec3 a(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100));
    Vec3 b(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100));
    Vec3 c(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100));
    EXPECT_EQ(user_distance(a, b), user_distance(b, a));
    EXPECT_LE(user_distance(a, c), user_distance(a, b) + user_distance(b, c) + 1e-12);
  }
}

TEST(SafetyOk, Boundaries) {
  std::vector<Vec3> two{{0, 0, 50}, {100, 0, 50}};
  EXPECT_TRUE(safety_ok(two, 100.0));
  two[1].x() = 99.9;
  EXPECT_FALSE(safety_ok(two, 100.0));
  const double h = 150.0 * std::sqrt(3.0) / 2.0;
  std::vector<Vec3> tri{{0, 0, 50}, {150, 0, 50}, {75, h, 50}};
  EXPECT_TRUE(safety_ok(tri, 100.0));
}

TEST(GenerateScenario, PaperDefaults) {
  ScenarioConfig cfg;
  const Scenario s = generate_scenario(cfg, 42);
  EXPECT_EQ(s.uav_count(), 3);
  EXPECT_EQ(s.user_count(), 5);
  EXPECT_TRUE(safety_ok(s.positions(), s.d_min));
  for (const auto& u : s.users) {
    EXPECT_EQ(u.position.z(), 0.0);
    EXPECT_GE(u.position.x(), 0.0);
    EXPECT_LE(u.position.x(), 1000.0);
  }
  for (const auto& u : s.uavs) EXPECT_EQ(u.position.z(), 50.0);
  EXPECT_NEAR(s.radio.reference_gain, 7.25e-7, 0.01e-7);
}

TEST(GenerateScenario, Deterministic) {
  ScenarioConfig cfg;
  const Scenario a = generate_scenario(cfg, 7);
  const Scenario b = generate_scenario(cfg, 7);
  for (int m = 0; m < a.uav_count(); ++m) EXPECT_EQ(a.uavs[m].position, b.uavs[m].position);
  for (int k = 0; k < a.user_count(); ++k) EXPECT_EQ(a.users[k].position, b.users[k].position);
  const Scenario c = generate_scenario(cfg, 8);
  EXPECT_NE(a.users[0].position, c.users[0].position);
}

TEST(GenerateScenario, SingleUavAndInfeasibleArea) {
  ScenarioConfig cfg;
  cfg.uavs = 1;
  EXPECT_NO_THROW(generate_scenario(cfg, 1));
  cfg.uavs = 2;
  cfg.area_x = cfg.area_y = 10.0;
  EXPECT_THROW(generate_scenario(cfg, 1), InfeasibleGeometry);
}

TEST(GenerateScenario, RepairAlwaysSeparates) {
  ScenarioConfig cfg;
  cfg.uavs = 6;
  cfg.users = 8;
  cfg.area_x = cfg.area_y = 300.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) EXPECT_TRUE(safety_ok(generate_scenario(cfg, seed).positions(), 100.0));
}

TEST(Scenario, RequiresOverrideForManyUavs) {
  ScenarioConfig cfg;
  cfg.uavs = 5;
  cfg.users = 5;
  EXPECT_THROW(generate_scenario(cfg, 1), ConfigError);
  cfg.allow_uavs_ge_users = true;
  EXPECT_NO_THROW(generate_scenario(cfg, 1));
}

TEST(ValidateAssociation, Cases) {
  AssociationMatrix s(3, 5);
  s.entries(0, 0) = s.entries(1, 1) = s.entries(2, 2) = 1.0;
  EXPECT_TRUE(validate_association(s));
  s.entries(1, 1) = 0.0;
  s.entries(1, 0) = 1.0;
  EXPECT_FALSE(validate_association(s));
  AssociationMatrix c(1, 2, AssociationMode::continuous);
  c.entries(0, 0) = 0.5;
  c.entries(0, 1) = 0.4;
  EXPECT_TRUE(validate_association(c));
  c.mode = AssociationMode::binary;
  EXPECT_FALSE(validate_association(c));
}

TEST(Units, DbmConversion) {
  EXPECT_NEAR(dbm_to_watts(-110.0), 1e-14, 1e-28);
  EXPECT_NEAR(dbm_to_watts(30.0), 1.0, 1e-15);
}
