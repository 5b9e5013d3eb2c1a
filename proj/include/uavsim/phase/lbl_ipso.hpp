#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Core>

#include "uavsim/random.hpp"
#include "uavsim/scenario.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

// Split of the served-link amplitude around layer l:
//   w1^H G^H h = forward^H diag(u_l)^H backward,
// where forward = F^l is the wave arriving at layer l and backward = (L^l)^H is
// the user channel propagated back through layers L..l+1.
struct PartialProducts {
  Eigen::VectorXcd forward;
  Eigen::VectorXcd backward;
};

// Layer l is 1-based. `layer_phasors[i]` holds exp(j theta) of layer i+1.
inline PartialProducts partial_products(int m, int l, const std::vector<Eigen::VectorXcd>& layer_phasors,
                                        const TransferSet& t, const Eigen::VectorXcd& h) {
  const int layers = static_cast<int>(layer_phasors.size());
  PartialProducts p;
  p.forward = t.output[static_cast<std::size_t>(m)];
  for (int j = 2; j <= l; ++j) p.forward = t.W(j) * layer_phasors[j - 2].cwiseProduct(p.forward);
  p.backward = h;
  for (int j = layers; j > l; --j) p.backward = t.W(j).adjoint() * layer_phasors[j - 1].conjugate().cwiseProduct(p.backward);
  return p;
}

inline PartialProducts partial_products(int m, int l, const PhaseTensor& phases, const TransferSet& t,
                                        const Eigen::VectorXcd& h) {
  std::vector<Eigen::VectorXcd> u;
  for (int j = 0; j < phases.layers(); ++j) u.push_back(phasors(phases.layer(m, j)));
  return partial_products(m, l, u, t, h);
}

// Served-link amplitude for a candidate diagonal of layer l.
inline cplx layer_amplitude(const PartialProducts& p, const Eigen::VectorXcd& u) {
  return (p.forward.cwiseProduct(u)).dot(p.backward);
}

// Phases that co-phase every term of the layer sum.
inline std::vector<double> align_layer(const Eigen::VectorXcd& forward, const Eigen::VectorXcd& backward) {
  std::vector<double> theta(static_cast<std::size_t>(forward.size()));
  for (Eigen::Index n = 0; n < forward.size(); ++n)
    theta[static_cast<std::size_t>(n)] = wrap_phase(std::arg(backward(n)) - std::arg(forward(n)));
  return theta;
}

inline double aligned_gain(const PartialProducts& p) { return p.forward.cwiseAbs().dot(p.backward.cwiseAbs()); }

struct LblOptions {
  int sweeps = 200;  // kappa_max
};

// |w1^H G^H h| of UAV m after every layer update, sweep-major.
struct LblTrace {
  std::vector<std::vector<double>> gains;
};

// Layer-by-layer alignment of one UAV towards channel h, starting from the
// phases already in `phases`. Both partial products are rebuilt for every layer.
inline void lbl_ipso_uav(int m, const Eigen::VectorXcd& h, const TransferSet& t, PhaseTensor& phases,
                         const LblOptions& opt, std::vector<double>* gains = nullptr) {
  const int layers = phases.layers();
  std::vector<Eigen::VectorXcd> u;
  u.reserve(static_cast<std::size_t>(layers));
  for (int j = 0; j < layers; ++j) u.push_back(phasors(phases.layer(m, j)));
  for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
    for (int l = 1; l <= layers; ++l) {
      const PartialProducts p = partial_products(m, l, u, t, h);
      const auto theta = align_layer(p.forward, p.backward);
      phases.set_layer(m, l - 1, theta);
      u[static_cast<std::size_t>(l - 1)] = phasors(phases.layer(m, l - 1));
      if (gains) gains->push_back(std::abs(layer_amplitude(p, u[static_cast<std::size_t>(l - 1)])));
    }
  }
}

// Aligns every associated UAV to its served user's whitened channel. The path
// gain is a positive scale of the channel, so it does not change the optimum.
// Unassociated UAVs keep their phases.
inline PhaseTensor lbl_ipso(const AssociationMatrix& s, const TransferSet& t, const ChannelRealization& c,
                            PhaseTensor phases, const LblOptions& opt = {}, LblTrace* trace = nullptr) {
  if (trace) trace->gains.assign(static_cast<std::size_t>(phases.uavs()), {});
  for (int m = 0; m < phases.uavs(); ++m) {
    const int k = s.served_user(m);
    if (k < 0) continue;
    lbl_ipso_uav(m, c.h_tilde(m, k), t, phases, opt, trace ? &trace->gains[static_cast<std::size_t>(m)] : nullptr);
  }
  return phases;
}

// Fresh start from seeded uniform phases.
inline PhaseTensor lbl_ipso(const AssociationMatrix& s, const TransferSet& t, const ChannelRealization& c, int layers,
                            Rng& rng, const LblOptions& opt = {}, LblTrace* trace = nullptr) {
  return lbl_ipso(s, t, c, PhaseTensor::random(s.uav_count(), layers, c.atoms, rng), opt, trace);
}

// Predicted multiply count of a full run; what the strategy switch budgets against.
inline double lbl_ipso_cost(int atoms, int uavs, int layers, int sweeps) {
  const double n = atoms;
  const double l = layers;
  return 4.0 * n * n * uavs * l * l * sweeps;
}

}  // namespace uavsim
