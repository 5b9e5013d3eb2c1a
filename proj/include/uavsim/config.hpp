#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavsim/energy.hpp"
#include "uavsim/error.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

using json = nlohmann::json;


inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

inline void exclusive(const json& j, const char* a, const char* b, const std::string& where) {
  if (j.contains(a) && j.contains(b))
    throw ConfigError("'" + std::string(a) + "' and '" + b + "' are mutually exclusive in " + where);
}

inline EnergyParams parse_energy(const json& j) {
  const std::string where = "energy";
  check_keys(j,
             {"blade_profile_power_w", "tip_speed_m_s", "induced_velocity_m_s", "fuselage_drag_ratio",
              "air_density_kg_m3", "rotor_solidity", "rotor_disc_area_m2", "blade_drag_coefficient", "uav_mass_kg",
              "uav_weight_n", "sim_mass_kg", "induced_power_constant", "hover_induced_power_w", "battery_energy_j",
              "extra_power_w", "operation_time_s", "cruise_speed_m_s"},
             where);
  exclusive(j, "uav_mass_kg", "uav_weight_n", where);
  exclusive(j, "induced_power_constant", "hover_induced_power_w", where);
  EnergyParams p = EnergyParams::reference_preset();
  read(j, "blade_profile_power_w", p.blade_profile_power, where);
  read(j, "tip_speed_m_s", p.tip_speed, where);
  read(j, "induced_velocity_m_s", p.induced_velocity, where);
  read(j, "fuselage_drag_ratio", p.fuselage_drag_ratio, where);
  read(j, "air_density_kg_m3", p.air_density, where);
  read(j, "rotor_solidity", p.rotor_solidity, where);
  read(j, "rotor_disc_area_m2", p.rotor_disc_area, where);
  read(j, "blade_drag_coefficient", p.blade_drag_coefficient, where);
  read(j, "uav_mass_kg", p.uav_mass, where);
  if (j.contains("uav_weight_n")) {
    double w = 0.0;
    read(j, "uav_weight_n", w, where);
    p.uav_mass = w / kGravity;
  }
  read(j, "sim_mass_kg", p.sim_mass, where);
  read(j, "battery_energy_j", p.battery_energy, where);
  read(j, "extra_power_w", p.extra_power, where);
  read(j, "operation_time_s", p.operation_time, where);
  read(j, "cruise_speed_m_s", p.cruise_speed, where);
  if (j.contains("induced_power_constant")) {
    read(j, "induced_power_constant", p.induced_power_constant, where);
  } else {
    // The hover induced power refers to the bare airframe.
    double hover = 944.9;
    read(j, "hover_induced_power_w", hover, where);
    p.induced_power_constant = EnergyParams::solve_induced_constant(hover, p.uav_mass, p.rotor_disc_area);
  }
  if (!p.valid()) throw ConfigError("energy parameters must be positive");
  return p;
}

}  // namespace detail

// Scenario config from JSON. Unknown keys are rejected; anything absent keeps
// the ScenarioConfig default. Powers may be given in dBm or watts, the carrier
// as a wavelength or a frequency, the SIM thickness in metres or wavelengths.
inline ScenarioConfig parse_config(const json& j) {
  const std::string where = "config";
  detail::check_keys(j,
                     {"uavs", "users", "area", "altitude", "d_min", "wavelength", "carrier_frequency_hz",
                      "reference_gain", "sim", "transmit_power_dbm", "transmit_power_w", "noise_power_dbm",
                      "noise_power_w", "energy", "solver", "seed", "allow_uavs_ge_users"},
                     where);
  for (auto [a, b] : {std::pair{"wavelength", "carrier_frequency_hz"}, {"transmit_power_dbm", "transmit_power_w"},
                      {"noise_power_dbm", "noise_power_w"}})
    detail::exclusive(j, a, b, where);

  ScenarioConfig c;
  detail::read(j, "uavs", c.uavs, where);
  detail::read(j, "users", c.users, where);
  if (j.contains("area")) {
    std::vector<double> a;
    detail::read(j, "area", a, where);
    if (a.size() != 2) throw ConfigError("'area' must be [x, y]");
    c.area_x = a[0];
    c.area_y = a[1];
  }
  detail::read(j, "altitude", c.altitude, where);
  detail::read(j, "d_min", c.d_min, where);
  detail::read(j, "wavelength", c.wavelength, where);
  if (j.contains("carrier_frequency_hz")) {
    double f = 0.0;
    detail::read(j, "carrier_frequency_hz", f, where);
    if (!(f > 0.0)) throw ConfigError("carrier frequency must be positive");
    c.wavelength = kSpeedOfLight / f;
  }
  detail::read(j, "reference_gain", c.reference_gain, where);

  c.thickness = 5.0 * c.wavelength;
  if (j.contains("sim")) {
    const json& s = j.at("sim");
    detail::check_keys(s, {"layers", "atoms", "thickness", "thickness_wavelengths"}, "sim");
    detail::exclusive(s, "thickness", "thickness_wavelengths", "sim");
    detail::read(s, "layers", c.layers, "sim");
    detail::read(s, "atoms", c.atoms, "sim");
    detail::read(s, "thickness", c.thickness, "sim");
    if (s.contains("thickness_wavelengths")) {
      double t = 0.0;
      detail::read(s, "thickness_wavelengths", t, "sim");
      c.thickness = t * c.wavelength;
    }
  }

  auto power = [&](const char* dbm, const char* w, double& out) {
    if (j.contains(dbm)) {
      double v = 0.0;
      detail::read(j, dbm, v, where);
      out = dbm_to_watts(v);
    }
    detail::read(j, w, out, where);
  };
  power("transmit_power_dbm", "transmit_power_w", c.transmit_power);
  power("noise_power_dbm", "noise_power_w", c.noise_power);

  if (j.contains("energy")) c.energy = detail::parse_energy(j.at("energy"));
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::check_keys(s, {"kappa_max", "tau_max", "epsilon", "hgpso_budget"}, "solver");
    detail::read(s, "kappa_max", c.kappa_max, "solver");
    detail::read(s, "tau_max", c.tau_max, "solver");
    detail::read(s, "epsilon", c.epsilon, "solver");
    detail::read(s, "hgpso_budget", c.hgpso_budget, "solver");
  }
  detail::read(j, "seed", c.seed, where);
  detail::read(j, "allow_uavs_ge_users", c.allow_uavs_ge_users, where);

  if (c.uavs < 1 || c.users < 1) throw ConfigError("need at least one UAV and one user");
  if (c.uavs >= c.users && !c.allow_uavs_ge_users)
    throw ConfigError("uavs must be fewer than users unless allow_uavs_ge_users is set");
  if (c.layers < 1 || c.atoms < 1) throw ConfigError("SIM needs at least one layer and one atom");
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(c.atoms))));
  if (root * root != c.atoms) throw ConfigError("atoms per layer must be a perfect square");
  if (!(c.area_x > 0.0) || !(c.area_y > 0.0) || !(c.altitude > 0.0) || !(c.d_min > 0.0))
    throw ConfigError("area, altitude and d_min must be positive");
  if (!(c.wavelength > 0.0) || !(c.thickness > 0.0)) throw ConfigError("wavelength and thickness must be positive");
  if (!(c.transmit_power > 0.0) || !(c.noise_power > 0.0)) throw ConfigError("powers must be positive");
  if (c.kappa_max < 1 || c.tau_max < 1 || !(c.epsilon >= 0.0) || !(c.hgpso_budget > 0.0))
    throw ConfigError("solver settings out of range");
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ScenarioConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

// The evaluation setup of the reference study, written out in full.
inline json paper_defaults_json() {
  const ScenarioConfig c;
  const EnergyParams& e = c.energy;
  return json{
      {"uavs", c.uavs},
      {"users", c.users},
      {"area", {c.area_x, c.area_y}},
      {"altitude", c.altitude},
      {"d_min", c.d_min},
      {"wavelength", c.wavelength},
      {"sim", {{"layers", c.layers}, {"atoms", c.atoms}, {"thickness_wavelengths", c.thickness / c.wavelength}}},
      {"transmit_power_w", c.transmit_power},
      {"noise_power_w", c.noise_power},
      {"energy",
       {{"blade_profile_power_w", e.blade_profile_power},
        {"tip_speed_m_s", e.tip_speed},
        {"induced_velocity_m_s", e.induced_velocity},
        {"fuselage_drag_ratio", e.fuselage_drag_ratio},
        {"air_density_kg_m3", e.air_density},
        {"rotor_solidity", e.rotor_solidity},
        {"rotor_disc_area_m2", e.rotor_disc_area},
        {"blade_drag_coefficient", e.blade_drag_coefficient},
        {"uav_weight_n", e.uav_mass * kGravity},
        {"sim_mass_kg", e.sim_mass},
        {"hover_induced_power_w", 944.9},
        {"battery_energy_j", e.battery_energy},
        {"extra_power_w", e.extra_power},
        {"operation_time_s", e.operation_time},
        {"cruise_speed_m_s", e.cruise_speed}}},
      {"solver",
       {{"kappa_max", c.kappa_max}, {"tau_max", c.tau_max}, {"epsilon", c.epsilon}, {"hgpso_budget", c.hgpso_budget}}},
      {"seed", c.seed}};
}

enum class SweepVariable { layers, atoms, users };

inline const char* sweep_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::layers: return "L";
    case SweepVariable::atoms: return "N";
    case SweepVariable::users: return "K";
  }
  return "?";
}

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"ao", "ud", "pso", "de", "rd", "no_sim"};
  return m;
}

struct ExperimentSpec {
  SweepVariable sweep = SweepVariable::layers;
  std::vector<int> values;
  int trials = 1;
  std::vector<std::string> methods{"ao"};
  std::uint64_t seed = 1;
  ScenarioConfig base;
};

inline ScenarioConfig apply_sweep(ScenarioConfig c, SweepVariable v, int value) {
  switch (v) {
    case SweepVariable::layers: c.layers = value; break;
    case SweepVariable::atoms: c.atoms = value; break;
    case SweepVariable::users: c.users = value; break;
  }
  return c;
}

// `scenario` holds an inline config object; `scenario_file` is resolved
// relative to the spec file.
inline ExperimentSpec parse_experiment(const json& j, const std::filesystem::path& spec_dir = {}) {
  const std::string where = "experiment";
  detail::check_keys(j, {"sweep", "values", "trials", "methods", "seed", "scenario", "scenario_file"}, where);
  detail::exclusive(j, "scenario", "scenario_file", where);
  ExperimentSpec e;
  std::string sweep;
  detail::read(j, "sweep", sweep, where);
  if (sweep == "L")
    e.sweep = SweepVariable::layers;
  else if (sweep == "N")
    e.sweep = SweepVariable::atoms;
  else if (sweep == "K")
    e.sweep = SweepVariable::users;
  else
    throw ConfigError("'sweep' must be one of L, N, K");
  detail::read(j, "values", e.values, where);
  detail::read(j, "trials", e.trials, where);
  detail::read(j, "methods", e.methods, where);
  detail::read(j, "seed", e.seed, where);
  if (e.values.empty()) throw ConfigError("'values' must not be empty");
  if (e.trials < 1) throw ConfigError("'trials' must be positive");
  if (e.methods.empty()) throw ConfigError("'methods' must not be empty");
  for (const auto& m : e.methods)
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
      throw ConfigError("unknown method '" + m + "'");
  if (j.contains("scenario"))
    e.base = parse_config(j.at("scenario"));
  else if (j.contains("scenario_file"))
    e.base = load_config((spec_dir / j.at("scenario_file").get<std::string>()).string());
  // Every swept point must be a valid scenario on its own.
  for (int v : e.values) {
    const ScenarioConfig c = apply_sweep(e.base, e.sweep, v);
    if (v < 1) throw ConfigError("sweep values must be positive");
    if (e.sweep == SweepVariable::atoms) {
      const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
      if (root * root != v) throw ConfigError("N values must be perfect squares");
    }
    if (c.uavs >= c.users && !c.allow_uavs_ge_users)
      throw ConfigError("sweep value " + std::to_string(v) + " leaves uavs >= users; set allow_uavs_ge_users");
  }
  return e;
}

inline ExperimentSpec load_experiment(const std::string& path) {
  return parse_experiment(read_json_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace uavsim
