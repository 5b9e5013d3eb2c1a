#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "uavsim/sim_channel.hpp"

using namespace uavsim;

namespace {

constexpr double kLambda = 0.0107;

ScenarioConfig small_config(int uavs, int users, int layers, int atoms) {
  ScenarioConfig cfg;
  cfg.uavs = uavs;
  cfg.users = users;
  cfg.layers = layers;
  cfg.atoms = atoms;
  cfg.allow_uavs_ge_users = true;
  return cfg;
}

// Textbook evaluation of every coefficient, matrix and product from the formulas.
cplx naive_coefficient(double d, double delta, double area, double lambda) {
  const double pi = std::acos(-1.0);
  const double c = delta / d;
  return (area * c / d) * (1.0 / (2.0 * pi * d) - cplx(0.0, 1.0) / lambda) * std::exp(cplx(0.0, 2.0 * pi * d / lambda));
}

Eigen::MatrixXcd naive_response(const SimGeometry& g, double lambda, const PhaseTensor& ph, int m) {
  const int n = g.atoms;
  Eigen::MatrixXcd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dx = (i % g.atoms_per_row) - (j % g.atoms_per_row);
      const double dy = (i / g.atoms_per_row) - (j / g.atoms_per_row);
      const double d = std::sqrt(g.atom_pitch * g.atom_pitch * (dx * dx + dy * dy) + g.layer_spacing * g.layer_spacing);
      w(i, j) = naive_coefficient(d, g.layer_spacing, g.atom_area, lambda);
    }
  auto phi = [&](int l) {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) p(i, i) = std::exp(cplx(0.0, ph(m, l, i)));
    return p;
  };
  Eigen::MatrixXcd g_mat = phi(0);
  for (int l = 1; l < g.layers; ++l) g_mat = phi(l) * w * g_mat;
  return g_mat;
}

}  // namespace

TEST(Lattice, AtomIndex) {
  EXPECT_EQ(atom_index(1, 6), (AtomIndex{1, 1}));
  EXPECT_EQ(atom_index(36, 6), (AtomIndex{6, 6}));
  EXPECT_EQ(atom_index(7, 6), (AtomIndex{1, 2}));
}

TEST(Lattice, Spacings) {
  const auto g = SimGeometry::make(5, 36, 5 * kLambda, kLambda);
  EXPECT_EQ(intra_layer_spacing(3, 3, g), 0.0);
  EXPECT_NEAR(intra_layer_spacing(1, 2, g), kLambda / 2, 1e-15);
  EXPECT_NEAR(intra_layer_spacing(1, 8, g), kLambda / 2 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(inter_layer_distance(4, 4, g), kLambda, 1e-15);
  EXPECT_NEAR(g.layer_spacing, 0.0107, 1e-15);
}

TEST(Lattice, RejectsBadGeometry) {
  EXPECT_THROW(SimGeometry::make(0, 36, 0.05, kLambda), DegenerateGeometry);
  EXPECT_THROW(SimGeometry::make(2, 35, 0.05, kLambda), DegenerateGeometry);
  EXPECT_THROW(diffraction_coefficient(0.0, 1.0, 1e-5, kLambda), DegenerateGeometry);
}

TEST(Diffraction, ModulusAndPhase) {
  const double area = 2.5e-5;
  const double d = 0.013;
  const double c = 0.8;
  const double pi = std::acos(-1.0);
  const cplx w = diffraction_coefficient(d, c, area, kLambda);
  const double expect = (area * c / d) * std::sqrt(1.0 / std::pow(2 * pi * d, 2) + 1.0 / (kLambda * kLambda));
  EXPECT_NEAR(std::abs(w), expect, 1e-15);
  EXPECT_LT(std::abs(diffraction_coefficient(2 * d, c, area, kLambda)), std::abs(w));
  // Full-wavelength separation: the propagation phasor is 1, leaving the near/far factor.
  const cplx facing = diffraction_coefficient(kLambda, 1.0, area, kLambda);
  const cplx factor = (area / kLambda) * cplx(1.0 / (2 * pi * kLambda), -1.0 / kLambda);
  EXPECT_NEAR(std::abs(facing - factor), 0.0, 1e-12 * std::abs(factor));
}

TEST(Transfers, FourAtomOracle) {
  // Independently scripted entries for N = 4, layer spacing = lambda.
  const auto g = SimGeometry::make(2, 4, 2 * kLambda, kLambda);
  const Eigen::MatrixXcd w = inter_layer_matrix(g, kLambda);
  const cplx facing(0.03978873577297355, -0.25000000000000006);
  const cplx adjacent(0.15609132077621254, -0.12824222801977592);
  const cplx diagonal(0.16799510002622614, -0.004950121095059049);
  EXPECT_NEAR(std::abs(w(0, 0) - facing), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(w(0, 1) - adjacent), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(w(0, 2) - adjacent), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(w(0, 3) - diagonal), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(w(2, 1) - diagonal), 0.0, 1e-14);
  EXPECT_TRUE(w.isApprox(w.transpose()));
}

TEST(Transfers, LayerCountAndSharing) {
  const auto g1 = SimGeometry::make(1, 9, 5 * kLambda, kLambda);
  const auto t1 = build_transfers(g1, kLambda, 2);
  EXPECT_TRUE(t1.inter_layer.empty());
  EXPECT_EQ(t1.output.size(), 2u);
  const auto g3 = SimGeometry::make(3, 9, 5 * kLambda, kLambda);
  const auto t3 = build_transfers(g3, kLambda, 1);
  ASSERT_EQ(t3.inter_layer.size(), 2u);
  EXPECT_EQ(t3.W(2), t3.W(3));
  EXPECT_TRUE(t3.W(2).allFinite());
  EXPECT_TRUE(t3.output[0].allFinite());
}

TEST(Response, TrivialCases) {
  const auto g1 = SimGeometry::make(1, 9, 5 * kLambda, kLambda);
  const auto t1 = build_transfers(g1, kLambda, 1);
  PhaseTensor zero(1, 1, 9);
  EXPECT_TRUE(equivalent_response(0, zero, t1).isApprox(Eigen::MatrixXcd::Identity(9, 9)));
  Rng rng(1);
  const auto ph = PhaseTensor::random(1, 1, 9, rng);
  Eigen::VectorXcd x = Eigen::VectorXcd::Random(9);
  EXPECT_NEAR((equivalent_response(0, ph, t1) * x).norm(), x.norm(), 1e-12);

  const auto g2 = SimGeometry::make(2, 9, 5 * kLambda, kLambda);
  const auto t2 = build_transfers(g2, kLambda, 1);
  EXPECT_TRUE(equivalent_response(0, PhaseTensor(1, 2, 9), t2).isApprox(t2.W(2)));
}

TEST(Response, MatchesNaiveChain) {
  const auto g = SimGeometry::make(3, 9, 5 * kLambda, kLambda);
  const auto t = build_transfers(g, kLambda, 2);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ph = PhaseTensor::random(2, 3, 9, rng);
    for (int m = 0; m < 2; ++m) {
      const Eigen::MatrixXcd a = equivalent_response(m, ph, t);
      const Eigen::MatrixXcd b = naive_response(g, kLambda, ph, m);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
      const Eigen::VectorXcd beam = receive_beam(m, ph, t);
      EXPECT_LE((beam - a * t.output[m]).norm(), 1e-12 * beam.norm());
    }
  }
}

TEST(PhaseTensorTest, WrapsOnWrite) {
  PhaseTensor p(1, 1, 3);
  p.set(0, 0, 0, -0.5);
  p.set(0, 0, 1, 7.0);
  p.set(0, 0, 2, kTwoPi);
  EXPECT_NEAR(p(0, 0, 0), kTwoPi - 0.5, 1e-15);
  EXPECT_NEAR(p(0, 0, 1), 7.0 - kTwoPi, 1e-15);
  EXPECT_EQ(p(0, 0, 2), 0.0);
  for (double v : p.flat()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, kTwoPi);
  }
}

TEST(Correlation, StructureAndFactor) {
  EXPECT_EQ(sinc(0.0), 1.0);
  EXPECT_NEAR(sinc(1.0), 0.0, 1e-16);
  const auto g = SimGeometry::make(4, 36, 5 * kLambda, kLambda);
  const Eigen::MatrixXd r = spatial_correlation(g, kLambda);
  EXPECT_TRUE(r.isApprox(r.transpose(), 0.0));
  for (int i = 0; i < 36; ++i) EXPECT_EQ(r(i, i), 1.0);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  const Eigen::MatrixXd f = correlation_factor(r);
  EXPECT_LE((r - f * f.transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Channels, EmpiricalCovariance) {
  auto cfg = small_config(1, 1, 1, 9);
  const Scenario s = generate_scenario(cfg, 3);
  Rng rng(11);
  const auto c0 = sample_channels(s, rng);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(9, 9);
  const int draws = 100000;
  const Eigen::MatrixXcd f = c0.factor.cast<cplx>();
  for (int i = 0; i < draws; ++i) {
    Eigen::VectorXcd z(9);
    for (int n = 0; n < 9; ++n) z(n) = rng.complex_normal();
    const Eigen::VectorXcd h = f * z;
    acc += h * h.adjoint();
  }
  acc /= draws;
  EXPECT_LE((acc - c0.correlation.cast<cplx>()).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Channels, DeterministicAndPathGain) {
  auto cfg = small_config(2, 3, 2, 9);
  const Scenario s = generate_scenario(cfg, 3);
  Rng a(9), b(9);
  const auto ca = sample_channels(s, a);
  const auto cb = sample_channels(s, b);
  for (int m = 0; m < 2; ++m)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(ca.h(m, k), cb.h(m, k));
  EXPECT_NEAR(RadioParams::free_space_reference_gain(kLambda), 7.25e-7, 0.005e-7);
  EXPECT_NEAR(path_gain(1.0, 20.0) / path_gain(1.0, 10.0), 0.25, 1e-15);
  EXPECT_EQ(path_gain(1.0, 0.2), 1.0);
  const double d = user_distance(s.uavs[1].position, s.users[2].position);
  EXPECT_NEAR(ca.path_gain(1, 2), s.radio.reference_gain / (d * d), 1e-25);
}

TEST(Sinr, OracleAndHomogeneity) {
  auto cfg = small_config(1, 2, 2, 4);
  Scenario s = generate_scenario(cfg, 21);
  const auto t = build_transfers(s);
  Rng rng(2);
  const auto c = sample_channels(s, rng);
  const auto ph = PhaseTensor::random(1, 2, 4, rng);
  const Eigen::MatrixXcd g = naive_response(s.sim, s.radio.wavelength, ph, 0);
  const Eigen::VectorXcd b = g * t.output[0];
  double pw[2];
  for (int k = 0; k < 2; ++k) {
    cplx amp = 0.0;
    for (int n = 0; n < 4; ++n) amp += std::conj(b(n)) * c.h(0, k)(n);
    pw[k] = std::norm(amp) * s.users[k].transmit_power;
  }
  const double expect = pw[0] / (pw[1] + s.uavs[0].noise_power);
  EXPECT_NEAR(sinr(s, t, c, ph, 0, 0), expect, 1e-10 * expect);

  const double before = sinr(s, t, c, ph, 0, 1);
  for (auto& u : s.users) u.transmit_power *= 2.0;
  s.uavs[0].noise_power *= 2.0;
  EXPECT_NEAR(sinr(s, t, c, ph, 0, 1), before, 1e-12 * before);
}

TEST(Sinr, SingleUserIsSnr) {
  auto cfg = small_config(1, 1, 1, 4);
  const Scenario s = generate_scenario(cfg, 2);
  const auto t = build_transfers(s);
  Rng rng(2);
  const auto c = sample_channels(s, rng);
  const PhaseTensor ph(1, 1, 4);
  const double snr = std::norm(receive_beam(0, ph, t).dot(c.h(0, 0))) * 0.5 / 1e-14;
  EXPECT_NEAR(sinr(s, t, c, ph, 0, 0), snr, 1e-12 * snr);
}

TEST(Capacity, RatesAndSums) {
  EXPECT_EQ(rate(0.0), 0.0);
  EXPECT_EQ(rate(1.0), 1.0);
  auto cfg = small_config(3, 5, 2, 9);
  const Scenario s = generate_scenario(cfg, 4);
  const auto t = build_transfers(s);
  Rng rng(4);
  const auto c = sample_channels(s, rng);
  const auto ph = PhaseTensor::random(3, 2, 9, rng);
  const Eigen::MatrixXd r = rate_table(s, t, c, ph);
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(r(m, k), std::log2(1.0 + sinr(s, t, c, ph, m, k)), 1e-12);
  AssociationMatrix zero(3, 5);
  EXPECT_EQ(network_capacity(zero, r), 0.0);
  AssociationMatrix one(3, 5);
  one.entries(1, 3) = 1.0;
  EXPECT_EQ(network_capacity(one, r), r(1, 3));
  AssociationMatrix full(3, 5);
  full.entries(0, 2) = full.entries(1, 0) = full.entries(2, 4) = 1.0;
  EXPECT_NEAR(network_capacity(full, r), r(0, 2) + r(1, 0) + r(2, 4), 1e-12);
}
