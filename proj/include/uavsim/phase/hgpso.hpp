#pragma once

#include <string>

#include "uavsim/orchestrator.hpp"
#include "uavsim/phase/cvae.hpp"
#include "uavsim/phase/lbl_ipso.hpp"
#include "uavsim/scenario.hpp"

namespace uavsim {

enum class PhaseStrategy { lbl_ipso, cvae };

inline const char* to_string(PhaseStrategy s) { return s == PhaseStrategy::cvae ? "cvae" : "lbl"; }

struct HgpsoChoice {
  PhaseStrategy strategy = PhaseStrategy::lbl_ipso;
  double predicted_cost = 0.0;
  std::string warning;  // set when the budget is exceeded but no usable model exists
};

// Switches to the generator only when layer-by-layer alignment is predicted to
// cost more than `budget` operations and a model trained for this geometry exists.
inline HgpsoChoice hgpso_select(const Scenario& s, int sweeps, double budget, const CvaeModel* model) {
  HgpsoChoice c;
  c.predicted_cost = lbl_ipso_cost(s.sim.atoms, s.uav_count(), s.sim.layers, sweeps);
  if (c.predicted_cost <= budget) return c;
  if (model && model_matches(*model, s)) {
    c.strategy = PhaseStrategy::cvae;
    return c;
  }
  c.warning = "predicted LBL-IPSO cost " + std::to_string(c.predicted_cost) + " exceeds the budget " +
              std::to_string(budget) + " but no matching CVAE model is loaded; using LBL-IPSO";
  return c;
}

// Phase sub-step backed by a trained generator. The model is held by reference.
inline PhaseStep cvae_step(const CvaeModel& model) {
  return [&model](const PhaseStepInput& in) {
    return generate_phases(model, in.scenario, in.association, in.channels, in.current, in.rng);
  };
}

}  // namespace uavsim
