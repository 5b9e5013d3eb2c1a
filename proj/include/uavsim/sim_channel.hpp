#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "uavsim/random.hpp"
#include "uavsim/scenario.hpp"
#include "uavsim/sim_geometry.hpp"

namespace uavsim {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into [0, 2 pi).
inline double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

// Per-UAV, per-layer, per-atom phase shifts. Every write is wrapped into [0, 2 pi).
class PhaseTensor {
 public:
  PhaseTensor() = default;
  PhaseTensor(int uavs, int layers, int atoms)
      : uavs_(uavs), layers_(layers), atoms_(atoms), data_(static_cast<std::size_t>(uavs) * layers * atoms, 0.0) {}

  static PhaseTensor random(int uavs, int layers, int atoms, Rng& rng) {
    PhaseTensor t(uavs, layers, atoms);
    for (auto& v : t.data_) v = wrap_phase(rng.uniform(0.0, kTwoPi));
    return t;
  }

  int uavs() const { return uavs_; }
  int layers() const { return layers_; }
  int atoms() const { return atoms_; }
  std::size_t size() const { return data_.size(); }

  double operator()(int m, int l, int n) const { return data_[offset(m, l, n)]; }
  void set(int m, int l, int n, double theta) { data_[offset(m, l, n)] = wrap_phase(theta); }

  // Layer l is 0-based here (layer 1 of the stack is index 0).
  std::span<const double> layer(int m, int l) const {
    return {data_.data() + offset(m, l, 0), static_cast<std::size_t>(atoms_)};
  }
  void set_layer(int m, int l, std::span<const double> theta) {
    for (int n = 0; n < atoms_; ++n) set(m, l, n, theta[n]);
  }

  std::span<const double> flat() const { return data_; }
  void set_flat(std::span<const double> values) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = wrap_phase(values[i]);
  }

  // Copies all layers of UAV m from another tensor of the same shape.
  void copy_uav(int m, const PhaseTensor& other) {
    std::copy_n(other.data_.begin() + offset(m, 0, 0), static_cast<std::size_t>(layers_) * atoms_,
                data_.begin() + offset(m, 0, 0));
  }

  bool operator==(const PhaseTensor&) const = default;

 private:
  std::size_t offset(int m, int l, int n) const {
    return (static_cast<std::size_t>(m) * layers_ + l) * atoms_ + n;
  }

  int uavs_ = 0;
  int layers_ = 0;
  int atoms_ = 0;
  std::vector<double> data_;
};

// Inter-layer diffraction matrices and the output-layer-to-antenna vectors.
struct TransferSet {
  // inter_layer[i] is W^{i+2}: response from layer i+1 to layer i+2 (1-based layers).
  std::vector<Eigen::MatrixXcd> inter_layer;
  // output[m] is w1_m: response from the output layer to the antenna of UAV m.
  std::vector<Eigen::VectorXcd> output;

  int layers() const { return static_cast<int>(inter_layer.size()) + 1; }
  // 1-based layer index l in 2..L.
  const Eigen::MatrixXcd& W(int l) const { return inter_layer[static_cast<std::size_t>(l - 2)]; }
};

// Inter-layer matrix from the lattice and layer spacing; cos(psi) = delta / d.
inline Eigen::MatrixXcd inter_layer_matrix(const SimGeometry& g, double wavelength) {
  const int n = g.atoms;
  Eigen::MatrixXcd w(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      const double d = inter_layer_distance(i, j, g);
      w(i - 1, j - 1) = diffraction_coefficient(d, g.layer_spacing / d, g, wavelength);
    }
  }
  return w;
}

// Output-layer atoms to a receive antenna on the stack axis, one layer spacing
// behind the output layer.
inline Eigen::VectorXcd antenna_vector(const SimGeometry& g, double wavelength) {
  const int n = g.atoms;
  const double centre = 0.5 * (g.atoms_per_row + 1);
  Eigen::VectorXcd w(n);
  for (int i = 1; i <= n; ++i) {
    const auto idx = atom_index(i, g.atoms_per_row);
    const double rx = (idx.x - centre) * g.atom_pitch;
    const double ry = (idx.y - centre) * g.atom_pitch;
    const double d = std::sqrt(rx * rx + ry * ry + g.layer_spacing * g.layer_spacing);
    w(i - 1) = diffraction_coefficient(d, g.layer_spacing / d, g, wavelength);
  }
  return w;
}

inline TransferSet build_transfers(const SimGeometry& g, double wavelength, int uav_count) {
  TransferSet t;
  if (g.layers > 1) {
    const Eigen::MatrixXcd w = inter_layer_matrix(g, wavelength);
    t.inter_layer.assign(static_cast<std::size_t>(g.layers - 1), w);
  }
  t.output.assign(static_cast<std::size_t>(uav_count), antenna_vector(g, wavelength));
  return t;
}

inline TransferSet build_transfers(const Scenario& s) {
  return build_transfers(s.sim, s.radio.wavelength, s.uav_count());
}

inline Eigen::VectorXcd phasors(std::span<const double> theta) {
  Eigen::VectorXcd u(static_cast<Eigen::Index>(theta.size()));
  for (std::size_t i = 0; i < theta.size(); ++i) u(static_cast<Eigen::Index>(i)) = std::polar(1.0, theta[i]);
  return u;
}

// G_m = Phi^L W^L ... Phi^2 W^2 Phi^1 as an explicit N x N matrix.
inline Eigen::MatrixXcd equivalent_response(int m, const PhaseTensor& phases, const TransferSet& t) {
  const int layers = phases.layers();
  Eigen::MatrixXcd g = phasors(phases.layer(m, 0)).asDiagonal();
  for (int l = 2; l <= layers; ++l) {
    const Eigen::VectorXcd u = phasors(phases.layer(m, l - 1));
    g = u.asDiagonal() * (t.W(l) * g);
  }
  return g;
}

// b_m = G_m w1_m, evaluated as a chain of matrix-vector products. The received
// amplitude of user k is b_m^H h_{m,k}.
inline Eigen::VectorXcd receive_beam(int m, const PhaseTensor& phases, const TransferSet& t) {
  const int layers = phases.layers();
  Eigen::VectorXcd b = phasors(phases.layer(m, 0)).cwiseProduct(t.output[static_cast<std::size_t>(m)]);
  for (int l = 2; l <= layers; ++l) {
    Eigen::VectorXcd v = t.W(l) * b;
    b = phasors(phases.layer(m, l - 1)).cwiseProduct(v);
  }
  return b;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// R_{n,n'} = sinc(2 d_{n,n'} / lambda) for isotropic scattering.
inline Eigen::MatrixXd spatial_correlation(const SimGeometry& g, double wavelength) {
  const int n = g.atoms;
  Eigen::MatrixXd r(n, n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) r(i - 1, j - 1) = sinc(2.0 * intra_layer_spacing(i, j, g) / wavelength);
  return r;
}

// Factor F with R ~ F F^T from the symmetric eigendecomposition, negative
// eigenvalues clipped to zero (R is numerically rank-deficient for dense lattices).
inline Eigen::MatrixXd correlation_factor(const Eigen::MatrixXd& r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

inline double path_gain(double reference_gain, double distance) {
  const double d = std::max(distance, 1.0);
  return reference_gain / (d * d);
}

// Quasi-static correlated Rayleigh channels for every (UAV, user) pair.
// The whitened part is held fixed for the life of a trial; the path gain and the
// scaled channel follow the UAV positions.
struct ChannelRealization {
  int uavs = 0;
  int users = 0;
  int atoms = 0;
  std::vector<Eigen::VectorXcd> whitened;  // h~_{m,k}, index m * users + k
  std::vector<Eigen::VectorXcd> channel;   // h_{m,k} = sqrt(beta) h~_{m,k}
  Eigen::MatrixXd path_gain;               // beta_{m,k}
  Eigen::MatrixXd correlation;             // R
  Eigen::MatrixXd factor;                  // R ~ factor factor^T

  const Eigen::VectorXcd& h(int m, int k) const { return channel[static_cast<std::size_t>(m * users + k)]; }
  const Eigen::VectorXcd& h_tilde(int m, int k) const {
    return whitened[static_cast<std::size_t>(m * users + k)];
  }

  // Recomputes path gains and scaled channels for new UAV positions.
  void place(std::span<const Vec3> uav_positions, std::span<const UserSite> user_sites, double reference_gain) {
    for (int m = 0; m < uavs; ++m) {
      for (int k = 0; k < users; ++k) {
        const double beta = uavsim::path_gain(reference_gain, user_distance(uav_positions[m], user_sites[k].position));
        path_gain(m, k) = beta;
        channel[static_cast<std::size_t>(m * users + k)] = std::sqrt(beta) * h_tilde(m, k);
      }
    }
  }
};

inline ChannelRealization sample_channels(const Scenario& s, Rng& rng) {
  ChannelRealization c;
  c.uavs = s.uav_count();
  c.users = s.user_count();
  c.atoms = s.sim.atoms;
  c.correlation = spatial_correlation(s.sim, s.radio.wavelength);
  c.factor = correlation_factor(c.correlation);
  const auto count = static_cast<std::size_t>(c.uavs * c.users);
  c.whitened.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXcd z(c.atoms);
    for (int n = 0; n < c.atoms; ++n) z(n) = rng.complex_normal();
    c.whitened.push_back(c.factor.cast<cplx>() * z);
  }
  c.channel.resize(count);
  c.path_gain.resize(c.uavs, c.users);
  const auto pos = s.positions();
  c.place(pos, s.users, s.radio.reference_gain);
  return c;
}

// TransferSet is unused by the sampler but kept in the call shape used by the orchestrator.
inline ChannelRealization sample_channels(const Scenario& s, const TransferSet&, Rng& rng) {
  return sample_channels(s, rng);
}

// |b_m^H h~_{m,k}|^2 for all pairs: the SIM gain with unit path loss.
inline Eigen::MatrixXd whitened_gains(const PhaseTensor& phases, const TransferSet& t, const ChannelRealization& c) {
  Eigen::MatrixXd g(c.uavs, c.users);
  for (int m = 0; m < c.uavs; ++m) {
    const Eigen::VectorXcd b = receive_beam(m, phases, t);
    for (int k = 0; k < c.users; ++k) g(m, k) = std::norm(b.dot(c.h_tilde(m, k)));
  }
  return g;
}

// SINR of user k at UAV m given per-pair received powers (signal power of every user at every UAV).
inline double sinr_from_powers(const Eigen::MatrixXd& received, int m, int k, double noise) {
  const double total = received.row(m).sum();
  const double signal = received(m, k);
  return signal / (total - signal + noise);
}

// Received power p_k beta_{m,k} |b_m^H h~_{m,k}|^2 for all pairs.
inline Eigen::MatrixXd received_powers(const Scenario& s, const Eigen::MatrixXd& whitened_gain,
                                       const Eigen::MatrixXd& beta) {
  Eigen::MatrixXd r = whitened_gain.cwiseProduct(beta);
  for (int k = 0; k < s.user_count(); ++k) r.col(k) *= s.users[k].transmit_power;
  return r;
}

inline double sinr(const Scenario& s, const TransferSet& t, const ChannelRealization& c, const PhaseTensor& phases,
                   int m, int k) {
  const Eigen::VectorXcd b = receive_beam(m, phases, t);
  double signal = 0.0;
  double interference = 0.0;
  for (int kk = 0; kk < c.users; ++kk) {
    const double p = std::norm(b.dot(c.h(m, kk))) * s.users[kk].transmit_power;
    if (kk == k)
      signal = p;
    else
      interference += p;
  }
  return signal / (interference + s.uavs[m].noise_power);
}

inline double rate(double gamma) { return std::log2(1.0 + gamma); }

// Rate table log2(1 + SINR) for every pair at the current positions.
inline Eigen::MatrixXd rate_table(const Scenario& s, const TransferSet& t, const ChannelRealization& c,
                                  const PhaseTensor& phases) {
  const Eigen::MatrixXd received = received_powers(s, whitened_gains(phases, t, c), c.path_gain);
  Eigen::MatrixXd r(c.uavs, c.users);
  for (int m = 0; m < c.uavs; ++m)
    for (int k = 0; k < c.users; ++k) r(m, k) = rate(sinr_from_powers(received, m, k, s.uavs[m].noise_power));
  return r;
}

// Sum over S-weighted link rates, bits/s/Hz.
inline double network_capacity(const AssociationMatrix& s, const Eigen::MatrixXd& rates) {
  double total = 0.0;
  for (int m = 0; m < s.uav_count(); ++m)
    for (int k = 0; k < s.user_count(); ++k)
      if (s.entries(m, k) != 0.0) total += s.entries(m, k) * rates(m, k);
  return total;
}

}  // namespace uavsim
