#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "uavsim/association.hpp"
#include "uavsim/metaheuristics.hpp"
#include "uavsim/orchestrator.hpp"
#include "uavsim/phase/lbl_ipso.hpp"

namespace uavsim {

// One Monte-Carlo trial: a scenario and the whitened channels every method shares.
struct Trial {
  ScenarioConfig config;
  Scenario scenario;
  TransferSet transfers;
  ChannelRealization channels;
  std::uint64_t seed = 0;
};

inline Trial make_trial(const ScenarioConfig& cfg, std::uint64_t seed) {
  Trial t;
  t.config = cfg;
  t.seed = seed;
  t.scenario = generate_scenario(cfg, seed);
  t.transfers = build_transfers(t.scenario);
  Rng rng(derive_seed({seed, tag_hash("channels")}));
  t.channels = sample_channels(t.scenario, rng);
  return t;
}

inline AoOptions ao_options(const ScenarioConfig& cfg) {
  AoOptions o;
  o.tau_max = cfg.tau_max;
  o.epsilon = cfg.epsilon;
  return o;
}

inline PhaseStep lbl_step(int sweeps) {
  return [sweeps](const PhaseStepInput& in) {
    return lbl_ipso(in.association, in.transfers, in.channels, in.current, {sweeps});
  };
}

namespace detail {

inline AngleObjective capacity_objective(const PhaseStepInput& in) {
  return [&in](std::span<const double> flat) {
    PhaseTensor p(in.current.uavs(), in.current.layers(), in.current.atoms());
    p.set_flat(flat);
    return served_capacity(in.scenario, in.transfers, in.channels, p, in.association);
  };
}

inline PhaseTensor from_flat(const PhaseTensor& shape, const std::vector<double>& flat) {
  PhaseTensor p(shape.uavs(), shape.layers(), shape.atoms());
  p.set_flat(flat);
  return p;
}

}  // namespace detail

// Population searches over the whole flattened phase tensor, seeded with the current phases.
inline PhaseStep pso_step(const PsoOptions& opt = {}) {
  return [opt](const PhaseStepInput& in) {
    const auto r = pso_maximize(detail::capacity_objective(in), in.current.size(), in.current.flat(), in.rng, opt);
    return detail::from_flat(in.current, r.best);
  };
}

inline PhaseStep de_step(const DeOptions& opt = {}) {
  return [opt](const PhaseStepInput& in) {
    const auto r = de_maximize(detail::capacity_objective(in), in.current.size(), in.current.flat(), in.rng, opt);
    return detail::from_flat(in.current, r.best);
  };
}

struct MethodResult {
  double capacity = 0.0;
  int iterations = 0;
  SolveTrace trace;
  std::vector<Vec3> positions;
  AssociationMatrix association;
};

inline MethodResult from_ao(AoResult&& r) {
  MethodResult m;
  m.capacity = r.capacity;
  m.iterations = static_cast<int>(r.trace.iterations.size());
  m.positions = std::move(r.positions);
  m.association = std::move(r.association);
  m.trace = std::move(r.trace);
  return m;
}

// Alternating optimization with the given phase sub-solver. Initial phases are
// drawn from the trial stream so every method starts from the same tensor.
inline AoResult run_ao(const Trial& trial, const PhaseStep& step, const AoOptions& opt, const char* stream,
                       const Scenario* scenario_override = nullptr) {
  const Scenario& s = scenario_override ? *scenario_override : trial.scenario;
  Rng init(derive_seed({trial.seed, tag_hash("initial_phases")}));
  PhaseTensor phases = PhaseTensor::random(s.uav_count(), s.sim.layers, s.sim.atoms, init);
  Rng rng(derive_seed({trial.seed, tag_hash(stream)}));
  return ao_solve(s, trial.transfers, trial.channels, std::move(phases), step, opt, rng);
}

// Centres of M equal cells: a grid with ceil(sqrt(M)) columns, the last row
// splitting the full width among whatever UAVs remain.
inline std::vector<Vec3> uniform_deployment(int uavs, double area_x, double area_y, double altitude) {
  std::vector<Vec3> out;
  if (uavs < 1) return out;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(uavs))));
  const int rows = (uavs + cols - 1) / cols;
  const double cell_y = area_y / rows;
  for (int r = 0; r < rows; ++r) {
    const int in_row = r + 1 < rows ? cols : uavs - cols * (rows - 1);
    const double cell_x = area_x / in_row;
    for (int c = 0; c < in_row; ++c) out.emplace_back((c + 0.5) * cell_x, (r + 0.5) * cell_y, altitude);
  }
  return out;
}

// The trial scenario with UAVs deployed on the uniform grid, which also becomes
// their battery reference point.
inline Scenario with_uniform_deployment(const Scenario& s) {
  Scenario out = s;
  const auto grid = uniform_deployment(s.uav_count(), s.area_x, s.area_y, s.altitude);
  for (int m = 0; m < s.uav_count(); ++m) out.uavs[m].position = out.uavs[m].initial_position = grid[m];
  return out;
}

inline MethodResult benchmark_ao(const Trial& trial, const PhaseStep& step, const char* stream = "ao") {
  return from_ao(run_ao(trial, step, ao_options(trial.config), stream));
}

inline MethodResult benchmark_ud(const Trial& trial) {
  AoOptions opt = ao_options(trial.config);
  opt.optimize_placement = false;
  const Scenario s = with_uniform_deployment(trial.scenario);
  return from_ao(run_ao(trial, lbl_step(trial.config.kappa_max), opt, "ud", &s));
}

inline MethodResult benchmark_pso(const Trial& trial, const PsoOptions& opt = {}) {
  return benchmark_ao(trial, pso_step(opt), "pso");
}

inline MethodResult benchmark_de(const Trial& trial, const DeOptions& opt = {}) {
  return benchmark_ao(trial, de_step(opt), "de");
}

// Best of `candidates` random feasible solutions.
inline MethodResult benchmark_rd(const Trial& trial, int candidates = 100) {
  const Scenario& s = trial.scenario;
  const int m_count = s.uav_count();
  const int k_count = s.user_count();
  const double radius = max_travel_radius(s.energy);
  Rng rng(derive_seed({trial.seed, tag_hash("rd")}));
  ChannelRealization c = trial.channels;
  MethodResult best;
  best.capacity = -1.0;
  for (int cand = 0; cand < candidates; ++cand) {
    std::vector<Vec3> pos;
    for (int m = 0; m < m_count; ++m) {
      Vec3 p(rng.uniform(0.0, s.area_x), rng.uniform(0.0, s.area_y), s.altitude);
      const Vec3 w0 = s.uavs[m].initial_position;
      const double d = (p - w0).norm();
      if (d > radius) p = w0 + (p - w0) * (radius * (1.0 - 1e-9) / d);
      pos.push_back(p);
    }
    try {
      repair_separation(pos, s.d_min, s.area_x, s.area_y, rng);
    } catch (const InfeasibleGeometry&) {
      pos = s.initial_positions();
    }
    for (int m = 0; m < m_count; ++m)
      if (!energy_feasible(pos[m], s.uavs[m].initial_position, s.energy)) pos = s.initial_positions();

    std::vector<int> perm(static_cast<std::size_t>(k_count));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = k_count - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(static_cast<std::size_t>(i + 1))]);
    AssociationMatrix assoc(m_count, k_count);
    for (int m = 0; m < std::min(m_count, k_count); ++m) assoc.entries(m, perm[m]) = 1.0;

    const PhaseTensor phases = PhaseTensor::random(m_count, s.sim.layers, s.sim.atoms, rng);
    c.place(pos, s.users, s.radio.reference_gain);
    const double cap = served_capacity(s, trial.transfers, c, phases, assoc);
    if (cap > best.capacity) {
      best.capacity = cap;
      best.positions = pos;
      best.association = assoc;
    }
  }
  best.iterations = candidates;
  return best;
}

// UAVs without a metasurface: one receive antenna each, scalar Rayleigh links,
// grid deployment and the same assignment solver.
inline MethodResult benchmark_no_sim(const Trial& trial) {
  const Scenario s = with_uniform_deployment(trial.scenario);
  const int m_count = s.uav_count();
  const int k_count = s.user_count();
  Rng rng(derive_seed({trial.seed, tag_hash("no_sim")}));
  Eigen::MatrixXd received(m_count, k_count);
  for (int m = 0; m < m_count; ++m)
    for (int k = 0; k < k_count; ++k) {
      const double beta = path_gain(s.radio.reference_gain, user_distance(s.uavs[m].position, s.users[k].position));
      received(m, k) = std::norm(rng.complex_normal()) * beta * s.users[k].transmit_power;
    }
  Eigen::MatrixXd rates(m_count, k_count);
  for (int m = 0; m < m_count; ++m)
    for (int k = 0; k < k_count; ++k) rates(m, k) = rate(sinr_from_powers(received, m, k, s.uavs[m].noise_power));
  MethodResult r;
  r.association = associate(rates);
  r.capacity = network_capacity(r.association, rates);
  r.positions = s.positions();
  r.iterations = 1;
  return r;
}

}  // namespace uavsim
