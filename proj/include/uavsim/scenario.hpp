#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uavsim/energy.hpp"
#include "uavsim/error.hpp"
#include "uavsim/random.hpp"
#include "uavsim/sim_geometry.hpp"

namespace uavsim {

using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 2.998e8;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct UserSite {
  Vec3 position;          // z = 0
  double transmit_power;  // W
};

struct UavState {
  Vec3 position;          // z = altitude
  Vec3 initial_position;  // w0, anchor of the battery constraint
  double noise_power;     // W
};

struct RadioParams {
  double wavelength = 0.0107;   // m
  double reference_gain = 0.0;  // channel power at 1 m

  // Free-space gain at the 1 m reference distance, (lambda / 4 pi)^2.
  static double free_space_reference_gain(double wavelength) {
    const double r = wavelength / (4.0 * std::numbers::pi);
    return r * r;
  }
};

// Everything needed to generate a scenario. Powers are already in watts; the
// config reader converts dBm once at the boundary.
struct ScenarioConfig {
  int uavs = 3;
  int users = 5;
  double area_x = 1000.0;
  double area_y = 1000.0;
  double altitude = 50.0;
  double d_min = 100.0;
  double wavelength = 0.0107;
  double reference_gain = 0.0;  // <= 0 selects the free-space value
  int layers = 4;
  int atoms = 36;
  double thickness = 5.0 * 0.0107;
  double transmit_power = 0.5;
  double noise_power = 1e-14;
  EnergyParams energy = EnergyParams::reference_preset();
  std::uint64_t seed = 1;
  bool allow_uavs_ge_users = false;

  // Solver settings carried with the scenario file.
  int kappa_max = 200;
  int tau_max = 50;
  double epsilon = 1e-6;
  double hgpso_budget = 5e8;  // predicted LBL-IPSO flop budget before switching to the generator
};

struct Scenario {
  std::vector<UserSite> users;
  std::vector<UavState> uavs;
  SimGeometry sim;
  RadioParams radio;
  EnergyParams energy;
  double area_x = 0.0;
  double area_y = 0.0;
  double altitude = 0.0;
  double d_min = 0.0;
  std::uint64_t seed = 0;
  bool allow_uavs_ge_users = false;

  int uav_count() const { return static_cast<int>(uavs.size()); }
  int user_count() const { return static_cast<int>(users.size()); }

  std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(uavs.size());
    for (const auto& u : uavs) out.push_back(u.position);
    return out;
  }

  std::vector<Vec3> initial_positions() const {
    std::vector<Vec3> out;
    out.reserve(uavs.size());
    for (const auto& u : uavs) out.push_back(u.initial_position);
    return out;
  }

  // Throws ConfigError naming the first violated invariant.
  void validate() const {
    if (uavs.empty()) throw ConfigError("scenario needs at least one UAV");
    if (users.empty()) throw ConfigError("scenario needs at least one user");
    if (uavs.size() >= users.size() && !allow_uavs_ge_users)
      throw ConfigError("scenario has M >= K; set allow_m_ge_k to override");
    if (!(altitude > 0.0) || !(d_min > 0.0) || !(area_x > 0.0) || !(area_y > 0.0))
      throw ConfigError("altitude, d_min and area extents must be positive");
    if (!(radio.wavelength > 0.0) || !(radio.reference_gain > 0.0))
      throw ConfigError("wavelength and reference gain must be positive");
    for (const auto& u : users) {
      if (u.position.z() != 0.0) throw ConfigError("users must be on the ground (z = 0)");
      if (!(u.transmit_power > 0.0)) throw ConfigError("user transmit power must be positive");
    }
    for (const auto& u : uavs) {
      if (u.position.z() != altitude || u.initial_position.z() != altitude)
        throw ConfigError("UAV altitude must equal the scenario altitude");
      if (!(u.noise_power > 0.0)) throw ConfigError("UAV noise power must be positive");
    }
    if (!energy.valid()) throw ConfigError("energy parameters must be positive");
  }
};

inline double user_distance(const Vec3& w, const Vec3& u) { return (w - u).norm(); }

// Pairwise separation constraint between UAVs.
inline bool safety_ok(std::span<const Vec3> positions, double d_min) {
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if ((positions[i] - positions[j]).norm() < d_min) return false;
  return true;
}

// Moves UAVs apart until every pair is at least d_min apart, keeping them inside
// the area. Pairs are pushed symmetrically along their separation.
inline void repair_separation(std::vector<Vec3>& pos, double d_min, double area_x, double area_y, Rng& rng,
                              int max_steps = 1000) {
  const std::size_t m = pos.size();
  if (m < 2) return;
  if (std::hypot(area_x, area_y) < d_min)
    throw InfeasibleGeometry("area diagonal is shorter than the UAV safety distance");
  const double target = d_min * (1.0 + 1e-6);
  for (int step = 0; step < max_steps; ++step) {
    if (safety_ok(pos, d_min)) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        Eigen::Vector2d d = (pos[i] - pos[j]).head<2>();
        double dist = d.norm();
        if (dist >= target) continue;
        if (dist < 1e-9) {
          const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
          d = {std::cos(a), std::sin(a)};
          dist = 0.0;
        } else {
          d /= dist;
        }
        const double push = 0.5 * (target - dist);
        pos[i].head<2>() += push * d;
        pos[j].head<2>() -= push * d;
      }
    }
    for (auto& p : pos) {
      p.x() = std::clamp(p.x(), 0.0, area_x);
      p.y() = std::clamp(p.y(), 0.0, area_y);
    }
  }
  if (!safety_ok(pos, d_min))
    throw InfeasibleGeometry("could not separate " + std::to_string(m) + " UAVs by d_min inside the area");
}

// Users uniform over the area, UAVs uniform at the altitude then repaired to
// satisfy the safety distance.
inline Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.uavs < 1 || cfg.users < 1) throw ConfigError("need at least one UAV and one user");
  if (!(cfg.area_x > 0.0) || !(cfg.area_y > 0.0) || !(cfg.altitude > 0.0) || !(cfg.d_min > 0.0))
    throw ConfigError("area, altitude and d_min must be positive");
  if (!(cfg.transmit_power > 0.0) || !(cfg.noise_power > 0.0)) throw ConfigError("powers must be positive");

  Scenario s;
  s.sim = SimGeometry::make(cfg.layers, cfg.atoms, cfg.thickness, cfg.wavelength);
  s.radio.wavelength = cfg.wavelength;
  s.radio.reference_gain =
      cfg.reference_gain > 0.0 ? cfg.reference_gain : RadioParams::free_space_reference_gain(cfg.wavelength);
  s.energy = cfg.energy;
  s.area_x = cfg.area_x;
  s.area_y = cfg.area_y;
  s.altitude = cfg.altitude;
  s.d_min = cfg.d_min;
  s.seed = seed;
  s.allow_uavs_ge_users = cfg.allow_uavs_ge_users;

  Rng rng(derive_seed({seed, tag_hash("scenario")}));
  s.users.reserve(cfg.users);
  for (int k = 0; k < cfg.users; ++k) {
    const double x = rng.uniform(0.0, cfg.area_x);
    const double y = rng.uniform(0.0, cfg.area_y);
    s.users.push_back({Vec3(x, y, 0.0), cfg.transmit_power});
  }
  std::vector<Vec3> pos;
  pos.reserve(cfg.uavs);
  for (int m = 0; m < cfg.uavs; ++m) {
    const double x = rng.uniform(0.0, cfg.area_x);
    const double y = rng.uniform(0.0, cfg.area_y);
    pos.emplace_back(x, y, cfg.altitude);
  }
  repair_separation(pos, cfg.d_min, cfg.area_x, cfg.area_y, rng);
  for (const auto& p : pos) s.uavs.push_back({p, p, cfg.noise_power});
  s.validate();
  return s;
}

enum class AssociationMode { continuous, binary };

// UAV-by-user service matrix S (M x K).
struct AssociationMatrix {
  Eigen::MatrixXd entries;
  AssociationMode mode = AssociationMode::binary;

  AssociationMatrix() = default;
  AssociationMatrix(int uavs, int users, AssociationMode m = AssociationMode::binary)
      : entries(Eigen::MatrixXd::Zero(uavs, users)), mode(m) {}

  int uav_count() const { return static_cast<int>(entries.rows()); }
  int user_count() const { return static_cast<int>(entries.cols()); }

  // Served user of UAV m in binary mode, -1 when the UAV is idle.
  int served_user(int m) const {
    for (int k = 0; k < entries.cols(); ++k)
      if (entries(m, k) > 0.5) return k;
    return -1;
  }
};

// Range, row-sum and column-sum checks; binary mode also requires {0, 1} entries.
inline bool validate_association(const AssociationMatrix& s) {
  constexpr double tol = 1e-9;
  const auto& e = s.entries;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double v = e.data()[i];
    if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) return false;
    if (s.mode == AssociationMode::binary && v != 0.0 && v != 1.0) return false;
  }
  if (e.size() == 0) return true;
  if ((e.rowwise().sum().array() > 1.0 + tol).any()) return false;
  if ((e.colwise().sum().array() > 1.0 + tol).any()) return false;
  return true;
}

}  // namespace uavsim
