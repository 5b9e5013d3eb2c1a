#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace uavsim {

inline constexpr double kGravity = 9.81;

// Rotary-wing propulsion and battery parameters.
//
// The profile drag coefficient of the rotor blades is not needed by the power
// model and is kept only for completeness as `blade_drag_coefficient`; it must
// not be confused with the inter-layer spacing of the metasurface stack.
struct EnergyParams {
  double blade_profile_power = 580.7;   // P0, W
  double tip_speed = 200.0;             // U_tip, m/s
  double induced_velocity = 7.87;       // v0, m/s
  double fuselage_drag_ratio = 0.3;     // d0
  double air_density = 1.225;           // kg/m^3
  double rotor_solidity = 0.05;         // s
  double rotor_disc_area = 0.79;        // A, m^2
  double blade_drag_coefficient = 0.012;
  double uav_mass = 120.0 / kGravity;   // kg
  double sim_mass = 0.0;                // kg
  double induced_power_constant = 0.0;  // kappa, W kg^-3/2 m
  double battery_energy = 500e3;        // J
  double extra_power = 20.0;            // W
  double operation_time = 180.0;        // s
  double cruise_speed = 10.0;           // v_m, m/s

  double total_mass() const { return uav_mass + sim_mass; }

  // Induced power in hover for the loaded airframe.
  double induced_hover_power() const;

  // Back-solves kappa so that the bare airframe (sim_mass = 0) needs
  // `hover_induced_power` watts of induced power.
  static double solve_induced_constant(double hover_induced_power, double uav_mass, double disc_area) {
    return hover_induced_power / std::sqrt(uav_mass * uav_mass * uav_mass / disc_area);
  }

  // Rotary-wing values of the reference airframe; battery, extra power and
  // operation time are artifact defaults.
  static EnergyParams reference_preset() {
    EnergyParams p;
    p.induced_power_constant = solve_induced_constant(944.9, p.uav_mass, p.rotor_disc_area);
    return p;
  }

  bool valid() const {
    return blade_profile_power > 0 && tip_speed > 0 && induced_velocity > 0 && fuselage_drag_ratio > 0 &&
           air_density > 0 && rotor_solidity > 0 && rotor_disc_area > 0 && uav_mass > 0 && sim_mass >= 0 &&
           induced_power_constant > 0 && battery_energy > 0 && extra_power >= 0 && operation_time > 0 &&
           cruise_speed > 0;
  }
};

// kappa * sqrt(m^3 / A)
inline double induced_power(double total_mass, double disc_area, double kappa) {
  return kappa * std::sqrt(total_mass * total_mass * total_mass / disc_area);
}

inline double EnergyParams::induced_hover_power() const {
  return induced_power(total_mass(), rotor_disc_area, induced_power_constant);
}

// Propulsion power at forward speed v: blade profile + induced + parasite terms.
inline double propulsion_power(double v, const EnergyParams& p) {
  const double pi = p.induced_hover_power();
  const double v2 = v * v;
  const double v02 = p.induced_velocity * p.induced_velocity;
  const double profile = p.blade_profile_power * (1.0 + 3.0 * v2 / (p.tip_speed * p.tip_speed));
  const double induced = pi * std::sqrt(std::sqrt(1.0 + v2 * v2 / (4.0 * v02 * v02)) - v2 / (2.0 * v02));
  const double parasite = 0.5 * p.fuselage_drag_ratio * p.air_density * p.rotor_solidity * p.rotor_disc_area * v2 * v;
  return profile + induced + parasite;
}

inline double hover_power(const EnergyParams& p) { return p.blade_profile_power + p.induced_hover_power(); }

// Energy left for relocation after hovering and SIM/radio overhead for the whole service time.
inline double residual_energy(const EnergyParams& p) {
  return p.battery_energy - (hover_power(p) + p.extra_power) * p.operation_time;
}

// Largest relocation distance the battery allows; 0 when hovering alone exhausts it.
inline double max_travel_radius(const EnergyParams& p) {
  const double budget = residual_energy(p);
  if (budget <= 0.0) return 0.0;
  return budget * p.cruise_speed / propulsion_power(p.cruise_speed, p);
}

// Battery constraint for flying from w0 to w at cruise speed. A relative slack of
// 1e-12 of the battery absorbs rounding when w sits exactly on the boundary.
inline bool energy_feasible(const Eigen::Vector3d& w, const Eigen::Vector3d& w0, const EnergyParams& p) {
  const double hover = (hover_power(p) + p.extra_power) * p.operation_time;
  const double travel = propulsion_power(p.cruise_speed, p) * (w - w0).norm() / p.cruise_speed;
  return hover + travel <= p.battery_energy * (1.0 + 1e-12);
}

}  // namespace uavsim
