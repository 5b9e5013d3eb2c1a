#include <gtest/gtest.h>

#include <cmath>

#include "uavsim/placement.hpp"
#include "uavsim/sim_channel.hpp"

using namespace uavsim;

namespace {

struct Setup {
  Scenario scenario;
  PlacementProblem problem;
};

Setup make(int uavs, int users, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.uavs = uavs;
  cfg.users = users;
  cfg.layers = 2;
  cfg.atoms = 16;
  cfg.allow_uavs_ge_users = true;
  Setup s{generate_scenario(cfg, seed), {}};
  const auto t = build_transfers(s.scenario);
  Rng rng(seed * 3 + 1);
  const auto c = sample_channels(s.scenario, rng);
  const auto ph = PhaseTensor::random(uavs, 2, 16, rng);
  const Eigen::MatrixXd g = whitened_gains(ph, t, c);
  AssociationMatrix a(uavs, users);
  for (int m = 0; m < std::min(uavs, users); ++m) a.entries(m, m) = 1.0;
  s.problem = make_placement_problem(s.scenario, a, g);
  return s;
}

double rhat(const PlacementProblem& p, int m, const Vec2& w) {
  double total = p.noise(m);
  for (int l = 0; l < p.user_count(); ++l) total += p.coupling(m, l) / p.dist_sq(w, l);
  return std::log2(total);
}

}  // namespace

TEST(Taylor, ZeroGainsAndSingleUser) {
  auto s = make(1, 2, 1);
  s.problem.gains.setZero();
  const auto sur = taylor_coefficients(s.problem, s.problem.origin);
  EXPECT_EQ(sur.A.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(sur.B(0), std::log2(1e-14));

  auto one = make(1, 1, 2);
  const auto& p = one.problem;
  const auto t = taylor_coefficients(p, p.origin);
  const double d2 = p.dist_sq(p.origin[0], 0);
  EXPECT_DOUBLE_EQ(t.B(0), std::log2(p.coupling(0, 0) / d2 + p.noise(0)));
}

TEST(Taylor, MatchesFiniteDifferences) {
  auto s = make(3, 5, 3);
  const auto& p = s.problem;
  const auto sur = taylor_coefficients(p, p.origin);
  for (int m = 0; m < 3; ++m) {
    EXPECT_NEAR(sur.B(m), rhat(p, m, p.origin[m]), 1e-12);
    // Slope of Rhat along the squared distance to user k, moving radially.
    for (int k = 0; k < 5; ++k) {
      const Vec2 dir = (p.origin[m] - p.users[k]).normalized();
      const double h = 1e-3;
      const Vec2 a = p.origin[m] + h * dir;
      const Vec2 b = p.origin[m] - h * dir;
      double fd = 0.0;
      // Derivative wrt d_k^2 alone: perturb only user k's distance term.
      auto only_k = [&](const Vec2& w) {
        double total = p.noise(m);
        for (int l = 0; l < 5; ++l) total += p.coupling(m, l) / (l == k ? p.dist_sq(w, l) : p.dist_sq(p.origin[m], l));
        return std::log2(total);
      };
      fd = (only_k(a) - only_k(b)) / (p.dist_sq(a, k) - p.dist_sq(b, k));
      EXPECT_NEAR(-fd, sur.A(m, k), 1e-4 * sur.A(m, k) + 1e-30);
      EXPECT_GE(sur.A(m, k), 0.0);
    }
  }
}

TEST(Surrogate, TightAtAnchor) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = make(3, 5, seed);
    const auto& p = s.problem;
    const auto sur = taylor_coefficients(p, p.origin);
    const double anchored = surrogate_objective(p, sur, p.origin, sur.anchor_sq);
    EXPECT_NEAR(anchored, true_objective(p, p.origin), 1e-9);
    EXPECT_NEAR(capped_surrogate(p, sur, p.origin), true_objective(p, p.origin), 1e-9);
  }
}

TEST(Surrogate, LowerBoundAndAlphaMonotone) {
  auto s = make(3, 5, 4);
  const auto& p = s.problem;
  const auto sur = taylor_coefficients(p, p.origin);
  Rng rng(4);
  int checked = 0;
  while (checked < 100) {
    std::vector<Vec2> w = p.origin;
    for (auto& v : w) v += Vec2(rng.uniform(-300, 300), rng.uniform(-300, 300));
    const Eigen::MatrixXd alpha = alpha_at_cap(sur, p, w);
    if ((alpha.array() <= 0.0).any()) continue;
    ++checked;
    EXPECT_LE(surrogate_objective(p, sur, w, alpha), true_objective(p, w) + 1e-12);
    Eigen::MatrixXd bigger = alpha;
    bigger(0, 1) *= 1.5;
    EXPECT_GT(surrogate_objective(p, sur, w, bigger), surrogate_objective(p, sur, w, alpha));
  }
}

TEST(Surrogate, GradientMatchesFiniteDifferences) {
  auto s = make(3, 5, 5);
  const auto& p = s.problem;
  const auto sur = taylor_coefficients(p, p.origin);
  std::vector<Vec2> w = p.origin;
  w[0] += Vec2(10, -5);
  const auto g = capped_surrogate_gradient(p, sur, w);
  for (int m = 0; m < 3; ++m)
    for (int d = 0; d < 2; ++d) {
      auto a = w, b = w;
      a[m](d) += 1e-3;
      b[m](d) -= 1e-3;
      const double fd = (capped_surrogate(p, sur, a) - capped_surrogate(p, sur, b)) / 2e-3;
      EXPECT_NEAR(g[m](d), fd, 1e-5 * std::abs(fd) + 1e-12);
    }
}

TEST(Inner, MovesTowardServedUserWithoutInterference) {
  auto s = make(1, 1, 6);
  auto& p = s.problem;
  const auto sur = taylor_coefficients(p, p.origin);
  const auto r = solve_m_ulop(p, sur);
  EXPECT_FALSE(r.failed);
  EXPECT_LT((r.positions[0] - p.users[0]).norm(), (p.origin[0] - p.users[0]).norm());
  EXPECT_GE(r.objective, r.anchor_objective - 1e-9);
}

TEST(Inner, ZeroTravelRadiusKeepsAnchor) {
  auto s = make(2, 3, 7);
  auto& p = s.problem;
  p.travel_radius = 0.0;
  const auto r = solve_m_ulop(p, taylor_coefficients(p, p.origin));
  for (int m = 0; m < 2; ++m) EXPECT_EQ(r.positions[m], p.origin[m]);
}

TEST(Inner, GridOracleSingleUav) {
  // The convex subproblem is solved to its optimum: compare against a 201 x 201
  // lattice of the surrogate over the travel disk.
  auto s = make(1, 2, 8);
  auto& p = s.problem;
  p.travel_radius = 400.0;
  const auto sur = taylor_coefficients(p, p.origin);
  const auto r = solve_m_ulop(p, sur);
  double best = -1e300;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const Vec2 w = p.origin[0] + Vec2(-400.0 + 4.0 * i, -400.0 + 4.0 * j);
      if ((w - p.origin[0]).norm() > p.travel_radius) continue;
      best = std::max(best, capped_surrogate(p, sur, {w}));
    }
  EXPECT_GE(r.objective, best - 1e-3);
}

TEST(Sca, MonotoneAndFeasible) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = make(3, 5, seed);
    const auto& p = s.problem;
    const auto res = sca_loop(p, p.lift(p.origin));
    EXPECT_FALSE(res.failed);
    double prev = res.start_objective;
    for (const auto& r : res.rounds) {
      EXPECT_GE(r.objective, prev - 1e-9);
      prev = r.objective;
      EXPECT_TRUE(safety_ok(r.positions, p.d_min));
      for (int m = 0; m < 3; ++m)
        EXPECT_TRUE(energy_feasible(r.positions[m], s.scenario.uavs[m].initial_position, s.scenario.energy));
    }
    EXPECT_LE(res.rounds.size(), 30u);
  }
}

TEST(Sca, OptimalStartStops) {
  auto s = make(2, 3, 9);
  const auto& p = s.problem;
  const auto first = sca_loop(p, p.lift(p.origin));
  const auto again = sca_loop(p, first.positions);
  ASSERT_FALSE(again.rounds.empty());
  EXPECT_LE(again.rounds.size(), 2u);
  for (int m = 0; m < 2; ++m) EXPECT_LE((again.positions[m] - first.positions[m]).norm(), 1.0);
}
