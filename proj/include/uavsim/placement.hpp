#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "uavsim/energy.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

using Vec2 = Eigen::Vector2d;

// Data of the UAV location subproblem that stays fixed across SCA rounds:
// association, phase-dependent SIM gains and the constraint geometry.
struct PlacementProblem {
  std::vector<Vec2> users;      // horizontal user positions
  Eigen::VectorXd powers;       // p_k
  Eigen::VectorXd noise;        // sigma_m^2
  Eigen::MatrixXd gains;        // g_{m,k} = |w1^H G^H h~_{m,k}|^2
  std::vector<int> served;      // served user per UAV, -1 if idle
  std::vector<Vec2> origin;     // w0_m, centre of the battery disk
  double altitude = 0.0;
  double d_min = 0.0;
  double reference_gain = 0.0;
  double travel_radius = 0.0;   // closed form of the battery constraint

  int uav_count() const { return static_cast<int>(origin.size()); }
  int user_count() const { return static_cast<int>(users.size()); }

  // rho0 p_k g_{m,k}: received power at 1 m.
  double coupling(int m, int k) const { return reference_gain * powers(k) * gains(m, k); }

  // Squared 3D UAV-user distance, clamped at the 1 m reference distance.
  double dist_sq(const Vec2& w, int k) const {
    return std::max((w - users[k]).squaredNorm() + altitude * altitude, 1.0);
  }

  std::vector<Vec3> lift(const std::vector<Vec2>& w) const {
    std::vector<Vec3> out;
    out.reserve(w.size());
    for (const auto& p : w) out.emplace_back(p.x(), p.y(), altitude);
    return out;
  }
};

inline PlacementProblem make_placement_problem(const Scenario& s, const AssociationMatrix& assoc,
                                               const Eigen::MatrixXd& gains) {
  PlacementProblem p;
  const int m = s.uav_count();
  const int k = s.user_count();
  p.users.reserve(k);
  p.powers.resize(k);
  for (int j = 0; j < k; ++j) {
    p.users.push_back(s.users[j].position.head<2>());
    p.powers(j) = s.users[j].transmit_power;
  }
  p.noise.resize(m);
  p.served.resize(m);
  for (int i = 0; i < m; ++i) {
    p.noise(i) = s.uavs[i].noise_power;
    p.served[i] = assoc.served_user(i);
    p.origin.push_back(s.uavs[i].initial_position.head<2>());
  }
  p.gains = gains;
  p.altitude = s.altitude;
  p.d_min = s.d_min;
  p.reference_gain = s.radio.reference_gain;
  p.travel_radius = max_travel_radius(s.energy);
  return p;
}

inline std::vector<Vec2> horizontal(const std::vector<Vec3>& w) {
  std::vector<Vec2> out;
  out.reserve(w.size());
  for (const auto& p : w) out.push_back(p.head<2>());
  return out;
}

// Sum of served-link rates as a function of UAV positions, all else fixed.
inline double true_objective(const PlacementProblem& p, const std::vector<Vec2>& w) {
  double total = 0.0;
  for (int m = 0; m < p.uav_count(); ++m) {
    const int k = p.served[m];
    if (k < 0) continue;
    double all = p.noise(m);
    double others = p.noise(m);
    for (int l = 0; l < p.user_count(); ++l) {
      const double rx = p.coupling(m, l) / p.dist_sq(w[m], l);
      all += rx;
      if (l != k) others += rx;
    }
    total += std::log2(all) - std::log2(others);
  }
  return total;
}

// First-order model of the useful-signal term around an anchor, plus the
// anchor data that the linearized constraints need.
struct SurrogateProblem {
  std::vector<Vec2> anchor;
  Eigen::MatrixXd A;          // linear coefficients, 1/m^2
  Eigen::VectorXd B;          // value at the anchor, log2 of total received power
  Eigen::MatrixXd anchor_sq;  // ||w^tau_m - u_k||^2
};

inline SurrogateProblem taylor_coefficients(const PlacementProblem& p, const std::vector<Vec2>& anchor) {
  const int m = p.uav_count();
  const int k = p.user_count();
  SurrogateProblem s;
  s.anchor = anchor;
  s.A = Eigen::MatrixXd::Zero(m, k);
  s.B = Eigen::VectorXd::Zero(m);
  s.anchor_sq.resize(m, k);
  for (int i = 0; i < m; ++i) {
    double total = p.noise(i);
    for (int j = 0; j < k; ++j) {
      s.anchor_sq(i, j) = p.dist_sq(anchor[i], j);
      total += p.coupling(i, j) / s.anchor_sq(i, j);
    }
    for (int j = 0; j < k; ++j) {
      const double d2 = s.anchor_sq(i, j);
      s.A(i, j) = p.coupling(i, j) / (d2 * d2) * std::numbers::log2e / total;
    }
    s.B(i) = std::log2(total);
  }
  return s;
}

// Linearized lower bound of ||w_m - u_k||^2 around the anchor: the cap on alpha_{m,k}.
inline double alpha_cap(const SurrogateProblem& s, const PlacementProblem& p, int m, int k, const Vec2& w) {
  return s.anchor_sq(m, k) + 2.0 * (s.anchor[m] - p.users[k]).dot(w - s.anchor[m]);
}

inline Eigen::MatrixXd alpha_at_cap(const SurrogateProblem& s, const PlacementProblem& p, const std::vector<Vec2>& w) {
  Eigen::MatrixXd a(p.uav_count(), p.user_count());
  for (int m = 0; m < p.uav_count(); ++m)
    for (int k = 0; k < p.user_count(); ++k) a(m, k) = alpha_cap(s, p, m, k, w[m]);
  return a;
}

// Concave surrogate of the location objective for explicit (W, alpha). Returns
// -inf when an interference alpha is not positive.
inline double surrogate_objective(const PlacementProblem& p, const SurrogateProblem& s, const std::vector<Vec2>& w,
                                  const Eigen::MatrixXd& alpha) {
  double total = 0.0;
  for (int m = 0; m < p.uav_count(); ++m) {
    const int k = p.served[m];
    if (k < 0) continue;
    double useful = s.B(m);
    for (int l = 0; l < p.user_count(); ++l)
      useful -= s.A(m, l) * ((w[m] - p.users[l]).squaredNorm() + p.altitude * p.altitude - s.anchor_sq(m, l));
    double interference = p.noise(m);
    for (int l = 0; l < p.user_count(); ++l) {
      if (l == k) continue;
      if (!(alpha(m, l) > 0.0)) return -std::numeric_limits<double>::infinity();
      interference += p.coupling(m, l) / alpha(m, l);
    }
    total += useful - std::log2(interference);
  }
  return total;
}

// Surrogate with every alpha at its cap; this is what the inner solver maximizes.
inline double capped_surrogate(const PlacementProblem& p, const SurrogateProblem& s, const std::vector<Vec2>& w) {
  return surrogate_objective(p, s, w, alpha_at_cap(s, p, w));
}

inline std::vector<Vec2> capped_surrogate_gradient(const PlacementProblem& p, const SurrogateProblem& s,
                                                   const std::vector<Vec2>& w) {
  std::vector<Vec2> g(w.size(), Vec2::Zero());
  for (int m = 0; m < p.uav_count(); ++m) {
    const int k = p.served[m];
    if (k < 0) continue;
    Vec2 grad = Vec2::Zero();
    for (int l = 0; l < p.user_count(); ++l) grad -= 2.0 * s.A(m, l) * (w[m] - p.users[l]);
    double interference = p.noise(m);
    Vec2 weighted = Vec2::Zero();
    for (int l = 0; l < p.user_count(); ++l) {
      if (l == k) continue;
      const double a = alpha_cap(s, p, m, l, w[m]);
      const double c = p.coupling(m, l);
      interference += c / a;
      weighted += (c / (a * a)) * 2.0 * (s.anchor[m] - p.users[l]);
    }
    grad += weighted / (std::numbers::ln2 * interference);
    g[m] = grad;
  }
  return g;
}

struct PlacementOptions {
  int max_rounds = 30;
  double round_tolerance = 1e-6;
  int inner_max_iterations = 500;
  double gradient_tolerance = 1e-6;
  int projection_sweeps = 50;
  double projection_tolerance = 1e-8;
};

// Convex feasible set of one SCA round: linearized separation half-spaces and
// battery disks. Separation bounds are tightened by a relative 1e-10 and disks
// shrunk by 1e-12 so that projected points also pass the exact predicates.
class PlacementFeasibleSet {
 public:
  PlacementFeasibleSet(const PlacementProblem& p, const std::vector<Vec2>& anchor) : problem_(&p) {
    const int m = p.uav_count();
    radius_ = p.travel_radius * (1.0 - 1e-12);
    const double dmin_sq = p.d_min * p.d_min * (1.0 + 1e-10);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const Vec2 d = anchor[i] - anchor[j];
        pairs_.push_back({i, j, d, 0.5 * (dmin_sq + d.squaredNorm())});
      }
    }
  }

  std::optional<std::vector<Vec2>> project(std::vector<Vec2> x, const PlacementOptions& opt) const {
    const int m = problem_->uav_count();
    std::vector<Vec2> inc_ball(m, Vec2::Zero());
    std::vector<std::pair<Vec2, Vec2>> inc_pair(pairs_.size(), {Vec2::Zero(), Vec2::Zero()});
    for (int sweep = 0; sweep < opt.projection_sweeps; ++sweep) {
      double change = 0.0;
      for (int i = 0; i < m; ++i) {
        const Vec2 y = x[i] + inc_ball[i];
        const Vec2 z = project_ball(i, y);
        inc_ball[i] = y - z;
        change = std::max(change, (z - x[i]).norm());
        x[i] = z;
      }
      for (std::size_t q = 0; q < pairs_.size(); ++q) {
        const auto& hs = pairs_[q];
        const Vec2 yi = x[hs.i] + inc_pair[q].first;
        const Vec2 yj = x[hs.j] + inc_pair[q].second;
        Vec2 zi = yi;
        Vec2 zj = yj;
        project_half_space(hs, zi, zj);
        inc_pair[q] = {yi - zi, yj - zj};
        change = std::max({change, (zi - x[hs.i]).norm(), (zj - x[hs.j]).norm()});
        x[hs.i] = zi;
        x[hs.j] = zj;
      }
      if (change <= opt.projection_tolerance) break;
    }
    if (exactly_feasible(x)) return x;
    // Plain cyclic projections settle any residual left by the Dykstra sweeps.
    for (int sweep = 0; sweep < 200; ++sweep) {
      for (int i = 0; i < m; ++i) x[i] = project_ball(i, x[i]);
      for (const auto& hs : pairs_) project_half_space(hs, x[hs.i], x[hs.j]);
      for (int i = 0; i < m; ++i) x[i] = project_ball(i, x[i]);
      if (exactly_feasible(x)) return x;
    }
    return std::nullopt;
  }

  // Original (non-linearized) separation and battery constraints.
  bool exactly_feasible(const std::vector<Vec2>& x) const {
    const auto& p = *problem_;
    for (int i = 0; i < p.uav_count(); ++i)
      if ((x[i] - p.origin[i]).norm() > p.travel_radius) return false;
    return safety_ok(p.lift(x), p.d_min);
  }

 private:
  struct HalfSpace {
    int i;
    int j;
    Vec2 d;    // anchor separation w_i - w_j
    double b;  // d . (x_i - x_j) >= b
  };

  Vec2 project_ball(int i, const Vec2& y) const {
    const Vec2 c = problem_->origin[i];
    const Vec2 r = y - c;
    const double n = r.norm();
    if (n <= radius_) return y;
    if (radius_ <= 0.0) return c;
    return c + r * (radius_ / n);
  }

  static void project_half_space(const HalfSpace& hs, Vec2& xi, Vec2& xj) {
    const double val = hs.d.dot(xi - xj);
    if (val >= hs.b) return;
    const double dn = hs.d.squaredNorm();
    if (dn <= 0.0) return;
    const double shift = (hs.b - val) / (2.0 * dn);
    xi += shift * hs.d;
    xj -= shift * hs.d;
  }

  const PlacementProblem* problem_;
  double radius_ = 0.0;
  std::vector<HalfSpace> pairs_;
};

struct InnerResult {
  std::vector<Vec2> positions;
  Eigen::MatrixXd alpha;
  double objective = 0.0;         // surrogate at the returned point
  double anchor_objective = 0.0;  // surrogate at the anchor
  double gradient_mapping_norm = 0.0;
  int iterations = 0;
  bool failed = false;
};

// Projected gradient ascent with backtracking on the capped surrogate.
// Never returns a point with a lower surrogate value than the anchor.
inline InnerResult solve_m_ulop(const PlacementProblem& p, const SurrogateProblem& s,
                                const PlacementOptions& opt = {}) {
  InnerResult r;
  std::vector<Vec2> x = s.anchor;
  double fx = capped_surrogate(p, s, x);
  r.anchor_objective = fx;
  const PlacementFeasibleSet set(p, s.anchor);
  if (!std::isfinite(fx) || !set.exactly_feasible(x)) {
    r.positions = x;
    r.alpha = alpha_at_cap(s, p, x);
    r.objective = fx;
    r.failed = true;
    return r;
  }
  const int m = p.uav_count();
  auto norm_of = [](const std::vector<Vec2>& v) {
    double acc = 0.0;
    for (const auto& e : v) acc += e.squaredNorm();
    return std::sqrt(acc);
  };
  double step = -1.0;
  for (int it = 0; it < opt.inner_max_iterations; ++it) {
    const auto g = capped_surrogate_gradient(p, s, x);
    const double gn = norm_of(g);
    if (gn == 0.0) break;
    if (step < 0.0) step = 10.0 / gn;
    double t = step * 2.0;
    bool accepted = false;
    std::vector<Vec2> y;
    double fy = 0.0;
    for (int tries = 0; tries < 60; ++tries, t *= 0.5) {
      std::vector<Vec2> trial(m);
      for (int i = 0; i < m; ++i) trial[i] = x[i] + t * g[i];
      auto proj = set.project(std::move(trial), opt);
      if (!proj) continue;
      const double f = capped_surrogate(p, s, *proj);
      double ascent = 0.0;
      for (int i = 0; i < m; ++i) ascent += g[i].dot((*proj)[i] - x[i]);
      if (std::isfinite(f) && f >= fx + 1e-4 * ascent && f >= fx) {
        y = std::move(*proj);
        fy = f;
        accepted = true;
        break;
      }
    }
    r.iterations = it + 1;
    if (!accepted) break;
    double moved = 0.0;
    for (int i = 0; i < m; ++i) moved += (y[i] - x[i]).squaredNorm();
    r.gradient_mapping_norm = std::sqrt(moved) / t;
    step = t;
    x = std::move(y);
    fx = fy;
    if (r.gradient_mapping_norm <= opt.gradient_tolerance) break;
  }
  r.positions = x;
  r.alpha = alpha_at_cap(s, p, x);
  r.objective = fx;
  return r;
}

struct ScaRound {
  double objective = 0.0;  // true objective after the round
  std::vector<Vec3> positions;
  int inner_iterations = 0;
  bool failed = false;
};

struct ScaResult {
  std::vector<Vec3> positions;
  double start_objective = 0.0;
  std::vector<ScaRound> rounds;
  bool failed = false;
};

// Successive convex approximation over UAV positions at fixed association and phases.
inline ScaResult sca_loop(const PlacementProblem& p, const std::vector<Vec3>& start, const PlacementOptions& opt = {}) {
  ScaResult res;
  std::vector<Vec2> w = horizontal(start);
  double obj = true_objective(p, w);
  res.start_objective = obj;
  for (int round = 0; round < opt.max_rounds; ++round) {
    const SurrogateProblem s = taylor_coefficients(p, w);
    const InnerResult inner = solve_m_ulop(p, s, opt);
    const double next = true_objective(p, inner.positions);
    ScaRound rec;
    rec.failed = inner.failed;
    rec.inner_iterations = inner.iterations;
    if (inner.failed || next < obj) {
      // Keep the anchor; the minorizer guarantees this branch only on solver failure.
      rec.objective = obj;
      rec.positions = p.lift(w);
      rec.failed = true;
      res.failed = true;
      res.rounds.push_back(std::move(rec));
      break;
    }
    rec.objective = next;
    rec.positions = p.lift(inner.positions);
    res.rounds.push_back(std::move(rec));
    const double gain = next - obj;
    w = inner.positions;
    obj = next;
    if (gain <= opt.round_tolerance) break;
  }
  res.positions = p.lift(w);
  return res;
}

}  // namespace uavsim
