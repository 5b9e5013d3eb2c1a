#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "uavsim/error.hpp"
#include "uavsim/scenario.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

namespace detail {

// Shortest-augmenting-path Hungarian method on an n x m cost matrix, n <= m.
// Returns col_of_row. `max_steps` bounds the total number of augmenting steps.
inline std::vector<int> hungarian_min(const Eigen::MatrixXd& cost, int max_steps) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  int steps = 0;
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      if (++steps > max_steps) throw SolverFailure("assignment LP hit its iteration limit");
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

}  // namespace detail

inline constexpr int kAssignmentIterationLimit = 10000;

// Relaxed association: maximize sum S R subject to row and column sums <= 1 and
// 0 <= S <= 1. The constraint matrix is totally unimodular, so the optimum is
// attained at a vertex; the assignment is solved exactly on the vertex set with
// the Hungarian method. The result is flagged continuous because it is the LP
// solution, even though its entries are integral.
inline AssociationMatrix solve_m_auuop(const Eigen::MatrixXd& rates) {
  const int m = static_cast<int>(rates.rows());
  const int k = static_cast<int>(rates.cols());
  for (Eigen::Index i = 0; i < rates.size(); ++i)
    if (!std::isfinite(rates.data()[i]) || rates.data()[i] < 0.0)
      throw SolverFailure("rate table must be finite and non-negative");
  AssociationMatrix s(m, k, AssociationMode::continuous);
  if (m == 0 || k == 0) return s;
  if (m <= k) {
    const auto col = detail::hungarian_min(-rates, kAssignmentIterationLimit);
    for (int i = 0; i < m; ++i)
      if (col[i] >= 0 && rates(i, col[i]) > 0.0) s.entries(i, col[i]) = 1.0;
  } else {
    const Eigen::MatrixXd t = -rates.transpose();
    const auto col = detail::hungarian_min(t, kAssignmentIterationLimit);
    for (int j = 0; j < k; ++j)
      if (col[j] >= 0 && rates(col[j], j) > 0.0) s.entries(col[j], j) = 1.0;
  }
  return s;
}

// Keeps, per UAV, the user with the largest service share (lowest index on
// ties). A user claimed by several UAVs stays with the UAV of larger rate
// (lowest UAV index on ties); the others become idle.
inline AssociationMatrix binarize(const AssociationMatrix& cont, const Eigen::MatrixXd& rates) {
  const int m = cont.uav_count();
  const int k = cont.user_count();
  std::vector<int> pick(m, -1);
  for (int i = 0; i < m; ++i) {
    int best = -1;
    double best_v = 0.0;
    for (int j = 0; j < k; ++j) {
      if (cont.entries(i, j) > best_v) {
        best_v = cont.entries(i, j);
        best = j;
      }
    }
    pick[i] = best;
  }
  AssociationMatrix out(m, k, AssociationMode::binary);
  for (int j = 0; j < k; ++j) {
    int owner = -1;
    for (int i = 0; i < m; ++i) {
      if (pick[i] != j) continue;
      if (owner < 0 || rates(i, j) > rates(owner, j)) owner = i;
    }
    if (owner >= 0) out.entries(owner, j) = 1.0;
  }
  return out;
}

struct Assignment {
  AssociationMatrix association;
  double objective = 0.0;
};

// Exhaustive maximum over injective partial assignments. Verification oracle.
inline Assignment brute_force_assignment(const Eigen::MatrixXd& rates) {
  const int m = static_cast<int>(rates.rows());
  const int k = static_cast<int>(rates.cols());
  if (m > 4 || k > 8) throw SizeLimit("brute-force assignment supports at most 4 UAVs and 8 users");
  std::vector<int> current(m, -1), best(m, -1);
  std::vector<char> taken(k, 0);
  double best_obj = -1.0;
  auto recurse = [&](auto&& self, int i, double acc) -> void {
    if (i == m) {
      if (acc > best_obj) {
        best_obj = acc;
        best = current;
      }
      return;
    }
    current[i] = -1;
    self(self, i + 1, acc);
    for (int j = 0; j < k; ++j) {
      if (taken[j]) continue;
      taken[j] = 1;
      current[i] = j;
      self(self, i + 1, acc + rates(i, j));
      taken[j] = 0;
    }
    current[i] = -1;
  };
  recurse(recurse, 0, 0.0);
  Assignment out{AssociationMatrix(m, k, AssociationMode::binary), best_obj};
  for (int i = 0; i < m; ++i)
    if (best[i] >= 0) out.association.entries(i, best[i]) = 1.0;
  return out;
}

// LP relaxation followed by binarization: the association sub-step of the AO loop.
inline AssociationMatrix associate(const Eigen::MatrixXd& rates) { return binarize(solve_m_auuop(rates), rates); }

}  // namespace uavsim
