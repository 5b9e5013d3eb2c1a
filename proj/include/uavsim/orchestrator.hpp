#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uavsim/association.hpp"
#include "uavsim/error.hpp"
#include "uavsim/placement.hpp"
#include "uavsim/random.hpp"
#include "uavsim/scenario.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

// Rate of each UAV's served link, 0 for idle UAVs. UAV m's rate depends only on
// its own phases, which is what makes per-UAV acceptance of phase updates safe.
inline Eigen::VectorXd served_rates(const Scenario& s, const TransferSet& t, const ChannelRealization& c,
                                    const PhaseTensor& phases, const AssociationMatrix& assoc) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(s.uav_count());
  for (int m = 0; m < s.uav_count(); ++m) {
    const int k = assoc.served_user(m);
    if (k < 0) continue;
    const Eigen::VectorXcd b = receive_beam(m, phases, t);
    double signal = 0.0;
    double interference = 0.0;
    for (int j = 0; j < s.user_count(); ++j) {
      const double p = std::norm(b.dot(c.h(m, j))) * s.users[j].transmit_power;
      if (j == k)
        signal = p;
      else
        interference += p;
    }
    r(m) = rate(signal / (interference + s.uavs[m].noise_power));
  }
  return r;
}

inline double served_capacity(const Scenario& s, const TransferSet& t, const ChannelRealization& c,
                              const PhaseTensor& phases, const AssociationMatrix& assoc) {
  return served_rates(s, t, c, phases, assoc).sum();
}

enum class Termination { converged, max_iter, solver_failure };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::solver_failure: return "solver_failure";
  }
  return "unknown";
}

struct IterationRecord {
  int tau = 0;
  double after_association = 0.0;
  double after_placement = 0.0;
  double after_phase = 0.0;
  int sca_rounds = 0;
  bool sca_failed = false;
  double wall_ms = 0.0;
};

struct SolveTrace {
  double initial_capacity = 0.0;
  std::vector<IterationRecord> iterations;
  Termination termination = Termination::max_iter;
  std::string message;

  double final_capacity() const { return iterations.empty() ? initial_capacity : iterations.back().after_phase; }

  // First outer iteration whose capacity is within `fraction` of the final value.
  int iterations_to_within(double fraction) const {
    const double target = final_capacity() * (1.0 - fraction);
    for (const auto& it : iterations)
      if (it.after_phase >= target) return it.tau;
    return static_cast<int>(iterations.size());
  }
};

// Everything a phase sub-solver may look at.
struct PhaseStepInput {
  const Scenario& scenario;
  const AssociationMatrix& association;
  const TransferSet& transfers;
  const ChannelRealization& channels;
  const PhaseTensor& current;
  Rng& rng;
};

using PhaseStep = std::function<PhaseTensor(const PhaseStepInput&)>;

struct AoOptions {
  int tau_max = 50;
  double epsilon = 1e-6;
  bool optimize_placement = true;
  PlacementOptions placement;
  bool wall_clock = false;
};

struct AoResult {
  AssociationMatrix association;
  std::vector<Vec3> positions;
  PhaseTensor phases;
  ChannelRealization channels;
  SolveTrace trace;
  double capacity = 0.0;
};

// Alternating optimization over association, UAV positions and SIM phases.
// `channels` must hold the trial's whitened channels; path gains follow the
// positions. Sub-solver failures are recorded and the loop carries on.
inline AoResult ao_solve(Scenario scenario, const TransferSet& t, ChannelRealization channels, PhaseTensor phases,
                         const PhaseStep& phase_step, const AoOptions& opt, Rng& rng) {
  using clock = std::chrono::steady_clock;
  AoResult out;
  SolveTrace& trace = out.trace;
  AssociationMatrix assoc(scenario.uav_count(), scenario.user_count());
  auto positions = scenario.positions();
  channels.place(positions, scenario.users, scenario.radio.reference_gain);
  double previous = 0.0;
  trace.initial_capacity = 0.0;
  bool converged = false;

  for (int tau = 1; tau <= opt.tau_max; ++tau) {
    const auto start = clock::now();
    IterationRecord rec;
    rec.tau = tau;

    const Eigen::MatrixXd rates = rate_table(scenario, t, channels, phases);
    try {
      const AssociationMatrix next = associate(rates);
      // The assignment is optimal for the current rates, so this only guards rounding.
      if (network_capacity(next, rates) >= network_capacity(assoc, rates)) assoc = next;
    } catch (const SolverFailure& e) {
      trace.termination = Termination::solver_failure;
      trace.message = e.what();
      break;
    }
    rec.after_association = served_capacity(scenario, t, channels, phases, assoc);

    if (opt.optimize_placement) {
      const Eigen::MatrixXd gains = whitened_gains(phases, t, channels);
      const PlacementProblem problem = make_placement_problem(scenario, assoc, gains);
      const ScaResult sca = sca_loop(problem, positions, opt.placement);
      rec.sca_rounds = static_cast<int>(sca.rounds.size());
      rec.sca_failed = sca.failed;
      positions = sca.positions;
      for (int m = 0; m < scenario.uav_count(); ++m) scenario.uavs[m].position = positions[m];
      channels.place(positions, scenario.users, scenario.radio.reference_gain);
    }
    rec.after_placement = served_capacity(scenario, t, channels, phases, assoc);

    const PhaseStepInput in{scenario, assoc, t, channels, phases, rng};
    const PhaseTensor candidate = phase_step(in);
    const Eigen::VectorXd old_rates = served_rates(scenario, t, channels, phases, assoc);
    const Eigen::VectorXd new_rates = served_rates(scenario, t, channels, candidate, assoc);
    for (int m = 0; m < scenario.uav_count(); ++m)
      if (new_rates(m) >= old_rates(m)) phases.copy_uav(m, candidate);
    rec.after_phase = served_capacity(scenario, t, channels, phases, assoc);

    if (opt.wall_clock) rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    trace.iterations.push_back(rec);
    const double gain = rec.after_phase - previous;
    previous = rec.after_phase;
    if (gain <= opt.epsilon) {
      converged = true;
      break;
    }
  }
  if (trace.termination != Termination::solver_failure)
    trace.termination = converged ? Termination::converged : Termination::max_iter;

  out.association = assoc;
  out.positions = positions;
  out.phases = std::move(phases);
  out.capacity = trace.final_capacity();
  out.channels = std::move(channels);
  return out;
}

}  // namespace uavsim
