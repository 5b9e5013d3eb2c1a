#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "uavsim/scenario.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

// One served UAV-user link with everything needed to re-evaluate its rate:
// the learning sample of the phase generator.
struct LinkSample {
  Eigen::VectorXd condition;           // raw features, see link_condition
  std::vector<double> phases;          // L x N, layer-major
  double capacity = 0.0;               // served-link rate under `phases`
  int served = 0;
  std::vector<Eigen::VectorXcd> channels;  // h_{m,j} for every user j, path gain included
  Eigen::VectorXd powers;
  double noise = 0.0;
};

// Feature vector of link (m, k): the served whitened channel (real then
// imaginary parts), log10 path gains to every user, and the UAV and served-user
// horizontal positions scaled by the area.
inline Eigen::VectorXd link_condition(const Scenario& s, const ChannelRealization& c, int m, int k) {
  const int n = c.atoms;
  const int users = s.user_count();
  Eigen::VectorXd f(2 * n + users + 4);
  const Eigen::VectorXcd& h = c.h_tilde(m, k);
  f.head(n) = h.real();
  f.segment(n, n) = h.imag();
  for (int j = 0; j < users; ++j) f(2 * n + j) = std::log10(c.path_gain(m, j));
  const Vec3& w = s.uavs[m].position;
  const Vec3& u = s.users[k].position;
  f.tail(4) << w.x() / s.area_x, w.y() / s.area_y, u.x() / s.area_x, u.y() / s.area_y;
  return f;
}

inline int link_condition_size(int atoms, int users) { return 2 * atoms + users + 4; }

inline std::vector<Eigen::VectorXcd> layer_phasors(std::span<const double> phases, int layers, int atoms) {
  std::vector<Eigen::VectorXcd> u;
  for (int l = 0; l < layers; ++l) u.push_back(phasors(phases.subspan(static_cast<std::size_t>(l) * atoms, atoms)));
  return u;
}

// Served-link rate for unit-modulus layer weights u (UAV 0 of `t`). When
// `grad` is given it receives 2 dC/d conj(u_l) per layer, so that
// dC = Re(sum conj(grad) du).
inline double link_rate(const TransferSet& t, const std::vector<Eigen::VectorXcd>& u, const LinkSample& s,
                        std::vector<Eigen::VectorXcd>* grad = nullptr) {
  const int layers = static_cast<int>(u.size());
  std::vector<Eigen::VectorXcd> v(static_cast<std::size_t>(layers));
  v[0] = t.output[0];
  Eigen::VectorXcd b = u[0].cwiseProduct(v[0]);
  for (int l = 2; l <= layers; ++l) {
    v[l - 1] = t.W(l) * b;
    b = u[l - 1].cwiseProduct(v[l - 1]);
  }
  const int users = static_cast<int>(s.channels.size());
  std::vector<cplx> amp(static_cast<std::size_t>(users));
  double total = s.noise;
  double signal = 0.0;
  for (int j = 0; j < users; ++j) {
    amp[j] = b.dot(s.channels[j]);
    const double p = s.powers(j) * std::norm(amp[j]);
    total += p;
    if (j == s.served) signal = p;
  }
  const double rest = total - signal;
  const double c = std::log2(total) - std::log2(rest);
  if (!grad) return c;

  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(b.size());
  for (int j = 0; j < users; ++j) {
    const double dp = (1.0 / total - (j == s.served ? 0.0 : 1.0 / rest)) / std::numbers::ln2;
    g += (2.0 * s.powers(j) * dp * std::conj(amp[j])) * s.channels[j];
  }
  grad->assign(static_cast<std::size_t>(layers), {});
  for (int l = layers; l >= 1; --l) {
    (*grad)[l - 1] = g.cwiseProduct(v[l - 1].conjugate());
    if (l > 1) g = t.W(l).adjoint() * g.cwiseProduct(u[l - 1].conjugate());
  }
  return c;
}

inline double link_rate(const TransferSet& t, const LinkSample& s, int layers, int atoms) {
  return link_rate(t, layer_phasors(s.phases, layers, atoms), s);
}

// Packs a served link of a scenario into a sample (phases taken from UAV m).
inline LinkSample make_link_sample(const Scenario& s, const ChannelRealization& c, const TransferSet& link_transfers,
                                   const PhaseTensor& phases, int m, int k) {
  LinkSample out;
  out.condition = link_condition(s, c, m, k);
  out.phases.reserve(static_cast<std::size_t>(phases.layers()) * phases.atoms());
  for (int l = 0; l < phases.layers(); ++l)
    for (double v : phases.layer(m, l)) out.phases.push_back(v);
  out.served = k;
  for (int j = 0; j < s.user_count(); ++j) out.channels.push_back(c.h(m, j));
  out.powers.resize(s.user_count());
  for (int j = 0; j < s.user_count(); ++j) out.powers(j) = s.users[j].transmit_power;
  out.noise = s.uavs[m].noise_power;
  out.capacity = link_rate(link_transfers, out, phases.layers(), phases.atoms());
  return out;
}

}  // namespace uavsim
