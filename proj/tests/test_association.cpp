#include <gtest/gtest.h>

#include "uavsim/association.hpp"

using namespace uavsim;

namespace {

Eigen::MatrixXd random_rates(int m, int k, Rng& rng) {
  Eigen::MatrixXd r(m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) r(i, j) = rng.uniform(0.0, 10.0);
  return r;
}

}  // namespace

TEST(Association, DiagonalDominant) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(3, 5, 0.1);
  r(0, 0) = r(1, 1) = r(2, 2) = 5.0;
  const auto s = solve_m_auuop(r);
  EXPECT_EQ(s.mode, AssociationMode::continuous);
  for (int m = 0; m < 3; ++m) EXPECT_EQ(s.entries(m, m), 1.0);
  EXPECT_DOUBLE_EQ(s.entries.sum(), 3.0);
}

TEST(Association, SingleUavPicksArgmax) {
  Eigen::MatrixXd r(1, 4);
  r << 1.0, 3.0, 2.0, 0.5;
  const auto s = associate(r);
  EXPECT_EQ(s.served_user(0), 1);
  const auto bf = brute_force_assignment(r);
  EXPECT_EQ(bf.association.served_user(0), 1);
  EXPECT_DOUBLE_EQ(bf.objective, 3.0);
}

TEST(Association, MatchesBruteForce) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(4));
    const int k = 1 + static_cast<int>(rng.index(8));
    const Eigen::MatrixXd r = random_rates(m, k, rng);
    const auto s = associate(r);
    EXPECT_TRUE(validate_association(s));
    EXPECT_NEAR(network_capacity(s, r), brute_force_assignment(r).objective, 1e-9);
  }
}

TEST(Association, AllEqualRates) {
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(3, 5, 2.5);
  EXPECT_DOUBLE_EQ(brute_force_assignment(r).objective, 7.5);
  EXPECT_NEAR(network_capacity(associate(r), r), 7.5, 1e-12);
}

TEST(Association, MoreUavsThanUsers) {
  Rng rng(3);
  const Eigen::MatrixXd r = random_rates(4, 2, rng);
  const auto s = associate(r);
  EXPECT_TRUE(validate_association(s));
  EXPECT_NEAR(network_capacity(s, r), brute_force_assignment(r).objective, 1e-9);
}

TEST(Association, RejectsBadRates) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(2, 3);
  r(1, 1) = -1.0;
  EXPECT_THROW(solve_m_auuop(r), SolverFailure);
  r(1, 1) = std::nan("");
  EXPECT_THROW(solve_m_auuop(r), SolverFailure);
}

TEST(Association, BruteForceSizeLimit) {
  EXPECT_THROW(brute_force_assignment(Eigen::MatrixXd::Ones(5, 6)), SizeLimit);
  EXPECT_THROW(brute_force_assignment(Eigen::MatrixXd::Ones(2, 9)), SizeLimit);
}

TEST(Binarize, Rules) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Ones(2, 3);
  AssociationMatrix b(2, 3, AssociationMode::continuous);
  b.entries(0, 1) = 1.0;
  b.entries(1, 2) = 1.0;
  EXPECT_EQ(binarize(b, r).entries, b.entries);

  AssociationMatrix row(1, 2, AssociationMode::continuous);
  row.entries << 0.6, 0.4;
  const auto out = binarize(row, Eigen::MatrixXd::Ones(1, 2));
  EXPECT_EQ(out.entries(0, 0), 1.0);
  EXPECT_EQ(out.entries(0, 1), 0.0);

  // Both UAVs prefer user 0; the UAV with the larger rate keeps it.
  AssociationMatrix conflict(2, 2, AssociationMode::continuous);
  conflict.entries << 0.5, 0.3, 0.5, 0.2;
  Eigen::MatrixXd rates(2, 2);
  rates << 1.0, 1.0, 2.0, 1.0;
  const auto fixed = binarize(conflict, rates);
  EXPECT_TRUE(validate_association(fixed));
  EXPECT_EQ(fixed.served_user(1), 0);
  EXPECT_EQ(fixed.served_user(0), -1);
  EXPECT_GE(network_capacity(fixed, rates), 0.0);
}

TEST(Binarize, BeatsGreedyRowArgmax) {
  Rng rng(8);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd r = random_rates(3, 5, rng);
    AssociationMatrix greedy(3, 5, AssociationMode::continuous);
    for (int m = 0; m < 3; ++m) {
      Eigen::Index k;
      r.row(m).maxCoeff(&k);
      greedy.entries(m, k) = 1.0;
    }
    const auto g = binarize(greedy, r);
    if (network_capacity(associate(r), r) >= network_capacity(g, r) - 1e-12) ++wins;
  }
  EXPECT_GE(wins, 95);
}
