#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "uavsim/benchmarks.hpp"
#include "uavsim/energy.hpp"

using namespace uavsim;

namespace {

Trial small_trial(int uavs, int users, int layers, int atoms, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.uavs = uavs;
  cfg.users = users;
  cfg.layers = layers;
  cfg.atoms = atoms;
  cfg.allow_uavs_ge_users = true;
  return make_trial(cfg, seed);
}

void expect_feasible(const Scenario& s, const std::vector<Vec3>& pos) {
  EXPECT_TRUE(safety_ok(pos, s.d_min));
  for (int m = 0; m < s.uav_count(); ++m) {
    EXPECT_DOUBLE_EQ(pos[m].z(), s.altitude);
    EXPECT_TRUE(energy_feasible(pos[m], s.uavs[m].initial_position, s.energy));
  }
}

}  // namespace

TEST(ServedRates, MatchRateTableOnAssignedPairs) {
  const Trial t = small_trial(2, 4, 2, 9, 5);
  Rng rng(1);
  const auto ph = PhaseTensor::random(2, 2, 9, rng);
  const Eigen::MatrixXd table = rate_table(t.scenario, t.transfers, t.channels, ph);
  const AssociationMatrix a = associate(table);
  const Eigen::VectorXd r = served_rates(t.scenario, t.transfers, t.channels, ph, a);
  for (int m = 0; m < 2; ++m) EXPECT_NEAR(r(m), table(m, a.served_user(m)), 1e-12 * table.maxCoeff());
  EXPECT_NEAR(r.sum(), network_capacity(a, table), 1e-10);
}

TEST(AoSolve, DegenerateSinglePairConvergesQuickly) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Trial t = small_trial(1, 1, 2, 9, seed);
    const AoResult r = run_ao(t, lbl_step(200), ao_options(t.config), "ao");
    EXPECT_EQ(r.trace.termination, Termination::converged);
    EXPECT_LE(r.trace.iterations.size(), 3u);
    EXPECT_GT(r.capacity, 0.0);
  }
}

TEST(AoSolve, MonotoneAcrossIterationsAndSubSteps) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const Trial t = make_trial(ScenarioConfig{}, seed);
    const AoResult r = run_ao(t, lbl_step(200), ao_options(t.config), "ao");
    double prev = 0.0;
    for (const auto& it : r.trace.iterations) {
      EXPECT_TRUE(std::isfinite(it.after_phase));
      EXPECT_GE(it.after_phase, prev - 1e-9);
      EXPECT_GE(it.after_phase, it.after_placement - 1e-9);
      prev = it.after_phase;
    }
    EXPECT_LE(static_cast<int>(r.trace.iterations.size()), t.config.tau_max);
    expect_feasible(t.scenario, r.positions);
  }
}

TEST(AoSolve, TauMaxStopsTheLoop) {
  const Trial t = make_trial(ScenarioConfig{}, 3);
  AoOptions opt = ao_options(t.config);
  opt.tau_max = 1;
  opt.epsilon = -1.0;
  const AoResult r = run_ao(t, lbl_step(50), opt, "ao");
  EXPECT_EQ(r.trace.iterations.size(), 1u);
  EXPECT_EQ(r.trace.termination, Termination::max_iter);
}

TEST(AoSolve, RejectsWorsePhaseProposals) {
  const Trial t = small_trial(2, 3, 2, 9, 8);
  // A step that always returns fresh random phases: accepted per UAV only if no worse.
  const PhaseStep noisy = [](const PhaseStepInput& in) {
    return PhaseTensor::random(in.current.uavs(), in.current.layers(), in.current.atoms(), in.rng);
  };
  AoOptions opt = ao_options(t.config);
  opt.epsilon = -1.0;
  opt.tau_max = 8;
  const AoResult r = run_ao(t, noisy, opt, "ao");
  for (std::size_t i = 1; i < r.trace.iterations.size(); ++i)
    EXPECT_GE(r.trace.iterations[i].after_phase, r.trace.iterations[i - 1].after_phase - 1e-9);
}

TEST(AoSolve, DeterministicGivenSeed) {
  const Trial t = make_trial(ScenarioConfig{}, 42);
  const AoResult a = run_ao(t, lbl_step(200), ao_options(t.config), "ao");
  const AoResult b = run_ao(t, lbl_step(200), ao_options(t.config), "ao");
  EXPECT_EQ(a.capacity, b.capacity);
  const auto fa = a.phases.flat();
  const auto fb = b.phases.flat();
  EXPECT_TRUE(std::equal(fa.begin(), fa.end(), fb.begin(), fb.end()));
}

TEST(SolveTrace, IterationsToWithin) {
  SolveTrace t;
  for (int i = 1; i <= 4; ++i) {
    IterationRecord r;
    r.tau = i;
    r.after_phase = std::vector<double>{5.0, 9.0, 9.95, 10.0}[i - 1];
    t.iterations.push_back(r);
  }
  EXPECT_EQ(t.iterations_to_within(0.01), 3);
  EXPECT_EQ(t.iterations_to_within(0.2), 2);
  EXPECT_DOUBLE_EQ(t.final_capacity(), 10.0);
}

TEST(UniformDeployment, SingleUavAtCentre) {
  const auto p = uniform_deployment(1, 1000.0, 600.0, 50.0);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0].x(), 500.0);
  EXPECT_DOUBLE_EQ(p[0].y(), 300.0);
  EXPECT_DOUBLE_EQ(p[0].z(), 50.0);
}

TEST(UniformDeployment, FourUavsAtQuadrantCentres) {
  const auto p = uniform_deployment(4, 1000.0, 1000.0, 50.0);
  ASSERT_EQ(p.size(), 4u);
  const double expect[4][2] = {{250, 250}, {750, 250}, {250, 750}, {750, 750}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(p[i].x(), expect[i][0]);
    EXPECT_DOUBLE_EQ(p[i].y(), expect[i][1]);
  }
}

TEST(UniformDeployment, ThreeUavsFillTwoRows) {
  const auto p = uniform_deployment(3, 1000.0, 1000.0, 50.0);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[2].x(), 500.0);
  EXPECT_DOUBLE_EQ(p[2].y(), 750.0);
}

TEST(Benchmarks, RandomBestOfManyDominatesBestOfOne) {
  const Trial t = make_trial(ScenarioConfig{}, 9);
  const MethodResult one = benchmark_rd(t, 1);
  const MethodResult many = benchmark_rd(t, 100);
  EXPECT_GE(many.capacity, one.capacity);
  expect_feasible(t.scenario, many.positions);
  EXPECT_EQ(benchmark_rd(t, 100).capacity, many.capacity);
}

TEST(Benchmarks, NoSimSingleUserIsPlainSnr) {
  const Trial t = small_trial(1, 1, 1, 4, 4);
  const MethodResult r = benchmark_no_sim(t);
  const Scenario s = with_uniform_deployment(t.scenario);
  Rng rng(derive_seed({t.seed, tag_hash("no_sim")}));
  const double beta = path_gain(s.radio.reference_gain, user_distance(s.uavs[0].position, s.users[0].position));
  const double snr = std::norm(rng.complex_normal()) * beta * s.users[0].transmit_power / s.uavs[0].noise_power;
  EXPECT_NEAR(r.capacity, std::log2(1.0 + snr), 1e-12);
  EXPECT_EQ(benchmark_no_sim(t).capacity, r.capacity);
}

TEST(Benchmarks, UniformDeploymentKeepsGrid) {
  const Trial t = make_trial(ScenarioConfig{}, 12);
  const MethodResult r = benchmark_ud(t);
  const auto grid = uniform_deployment(3, t.scenario.area_x, t.scenario.area_y, t.scenario.altitude);
  for (int m = 0; m < 3; ++m) EXPECT_EQ(r.positions[m], grid[m]);
}

TEST(Metaheuristics, ElitistHistoryAndWrappedPhases) {
  const Trial t = small_trial(2, 3, 1, 4, 6);
  Rng rng(3);
  const auto start = PhaseTensor::random(2, 1, 4, rng);
  const AssociationMatrix a = associate(rate_table(t.scenario, t.transfers, t.channels, start));
  const PhaseStepInput in{t.scenario, a, t.transfers, t.channels, start, rng};
  const auto f = detail::capacity_objective(in);
  const double f0 = f(start.flat());
  PsoOptions po;
  po.iterations = 20;
  DeOptions dopt;
  dopt.iterations = 20;
  for (const SearchResult& r : {pso_maximize(f, start.size(), start.flat(), rng, po),
                                de_maximize(f, start.size(), start.flat(), rng, dopt)}) {
    ASSERT_EQ(r.history.size(), 20u);
    EXPECT_GE(r.history.front(), f0);
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_GE(r.history[i], r.history[i - 1]);
    for (double v : r.best) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, kTwoPi);
    }
    EXPECT_DOUBLE_EQ(f(r.best), r.best_value);
  }
}

TEST(Metaheuristics, FindOptimumOfSmoothAngleFunction) {
  // Maximum 3 at (1, 2, 3).
  const AngleObjective f = [](std::span<const double> x) {
    return std::cos(x[0] - 1.0) + std::cos(x[1] - 2.0) + std::cos(x[2] - 3.0);
  };
  Rng rng(4);
  EXPECT_NEAR(pso_maximize(f, 3, {}, rng, {30, 200}).best_value, 3.0, 1e-6);
  EXPECT_NEAR(de_maximize(f, 3, {}, rng, {30, 200}).best_value, 3.0, 1e-6);
}
