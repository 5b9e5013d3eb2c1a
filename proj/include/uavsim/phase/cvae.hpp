#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uavsim/error.hpp"
#include "uavsim/phase/link.hpp"
#include "uavsim/phase/mlp.hpp"
#include "uavsim/random.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

struct CvaeShape {
  int layers = 2;
  int atoms = 16;
  int users = 5;
  int condition = 0;  // 0: derived from atoms and users
  int latent = 32;
  int hidden = 256;
  int depth = 2;  // hidden layers per network

  int phase_dim() const { return 2 * layers * atoms; }
  int condition_dim() const { return condition > 0 ? condition : link_condition_size(atoms, users); }
};

// Conditional VAE over (cos, sin) phase encodings. The SIM geometry is stored
// with the weights so the capacity term can be evaluated from a checkpoint.
struct CvaeModel {
  CvaeShape shape;
  double thickness = 0.0;
  double wavelength = 0.0;
  Mlp encoder;  // [x; c] -> [mu; logvar]
  Mlp decoder;  // [z; c] -> raw x
  std::array<double, 3> beta{1.0, 1.0, 1.0};  // recon, KL, capacity
  Eigen::VectorXd cond_mean;
  Eigen::VectorXd cond_scale;

  TransferSet transfers() const {
    return build_transfers(SimGeometry::make(shape.layers, shape.atoms, thickness, wavelength), wavelength, 1);
  }

  Eigen::VectorXd normalize(const Eigen::VectorXd& raw) const {
    return (raw - cond_mean).cwiseQuotient(cond_scale);
  }

  Eigen::Index parameter_count() const {
    return uavsim::parameter_count(encoder.layers) + uavsim::parameter_count(decoder.layers);
  }

  Eigen::VectorXd parameters() const {
    Eigen::VectorXd p(parameter_count());
    Eigen::Index at = 0;
    pack(encoder.layers, p, at);
    pack(decoder.layers, p, at);
    return p;
  }

  void set_parameters(const Eigen::VectorXd& p) {
    Eigen::Index at = 0;
    unpack(p, encoder.layers, at);
    unpack(p, decoder.layers, at);
  }
};

inline CvaeModel make_cvae(const CvaeShape& shape, double thickness, double wavelength, Rng& rng) {
  CvaeModel m;
  m.shape = shape;
  m.thickness = thickness;
  m.wavelength = wavelength;
  const int x = shape.phase_dim();
  const int c = shape.condition_dim();
  std::vector<int> enc{x + c};
  std::vector<int> dec{shape.latent + c};
  for (int i = 0; i < shape.depth; ++i) {
    enc.push_back(shape.hidden);
    dec.push_back(shape.hidden);
  }
  enc.push_back(2 * shape.latent);
  dec.push_back(x);
  m.encoder = Mlp(enc, rng);
  m.decoder = Mlp(dec, rng);
  m.cond_mean = Eigen::VectorXd::Zero(c);
  m.cond_scale = Eigen::VectorXd::Ones(c);
  return m;
}

// (cos, sin) pairs, layer-major.
inline Eigen::VectorXd encode_phases(std::span<const double> phases) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(2 * phases.size()));
  for (std::size_t i = 0; i < phases.size(); ++i) {
    x(2 * i) = std::cos(phases[i]);
    x(2 * i + 1) = std::sin(phases[i]);
  }
  return x;
}

// Scales every (cos, sin) pair onto the unit circle.
inline Eigen::VectorXd unit_pairs(const Eigen::VectorXd& raw) {
  Eigen::VectorXd u(raw.size());
  for (Eigen::Index i = 0; i + 1 < raw.size(); i += 2) {
    const double r = std::max(std::hypot(raw(i), raw(i + 1)), 1e-300);
    u(i) = raw(i) / r;
    u(i + 1) = raw(i + 1) / r;
  }
  return u;
}

inline std::vector<double> decode_phases(const Eigen::VectorXd& unit) {
  std::vector<double> th(static_cast<std::size_t>(unit.size() / 2));
  for (std::size_t i = 0; i < th.size(); ++i) th[i] = wrap_phase(std::atan2(unit(2 * i + 1), unit(2 * i)));
  return th;
}

struct CvaeForward {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::VectorXd z;
  Eigen::VectorXd raw;   // decoder output before normalization
  Eigen::VectorXd unit;  // normalized (cos, sin) pairs
};

// Single-sample pass. `sigma_scale` = 0 forces z = mu.
inline CvaeForward cvae_forward(const CvaeModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& raw_condition,
                                Rng& rng, double sigma_scale = 1.0) {
  const Eigen::VectorXd c = m.normalize(raw_condition);
  const int lat = m.shape.latent;
  Eigen::VectorXd in(x.size() + c.size());
  in << x, c;
  const Eigen::MatrixXd enc = m.encoder.forward(in);
  CvaeForward f;
  f.mu = enc.col(0).head(lat);
  f.sigma = (0.5 * enc.col(0).tail(lat).array()).exp() * sigma_scale;
  f.z.resize(lat);
  for (int i = 0; i < lat; ++i) f.z(i) = f.mu(i) + f.sigma(i) * rng.normal();
  Eigen::VectorXd dz(lat + c.size());
  dz << f.z, c;
  f.raw = m.decoder.forward(dz).col(0);
  f.unit = unit_pairs(f.raw);
  return f;
}

struct LossTerms {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double capacity = 0.0;
};

struct CvaeBatch {
  Eigen::MatrixXd x;          // phase encodings, one column per sample
  Eigen::MatrixXd condition;  // normalized conditions
  std::vector<const LinkSample*> samples;
};

inline CvaeBatch make_batch(const CvaeModel& m, std::span<const LinkSample* const> samples) {
  CvaeBatch b;
  const auto n = static_cast<Eigen::Index>(samples.size());
  b.x.resize(m.shape.phase_dim(), n);
  b.condition.resize(m.shape.condition_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.x.col(i) = encode_phases(samples[i]->phases);
    b.condition.col(i) = m.normalize(samples[i]->condition);
  }
  b.samples.assign(samples.begin(), samples.end());
  return b;
}

// Weighted loss beta1 recon + beta2 KL + beta3 capacity over a batch with fixed
// reparameterization noise `eps` (latent x batch). Gradients are accumulated
// into `grad` (flat, same order as CvaeModel::parameters) when given.
inline LossTerms cvae_loss(const CvaeModel& m, const TransferSet& t, const CvaeBatch& batch, const Eigen::MatrixXd& eps,
                           Eigen::VectorXd* grad = nullptr) {
  const Eigen::Index n = batch.x.cols();
  const int lat = m.shape.latent;
  const int layers = m.shape.layers;
  const int atoms = m.shape.atoms;
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd enc_in(batch.x.rows() + batch.condition.rows(), n);
  enc_in << batch.x, batch.condition;
  Mlp::Cache enc_cache, dec_cache;
  const Eigen::MatrixXd enc_out = m.encoder.forward(enc_in, grad ? &enc_cache : nullptr);
  const Eigen::MatrixXd mu = enc_out.topRows(lat);
  const Eigen::MatrixXd logvar = enc_out.bottomRows(lat);
  const Eigen::MatrixXd sigma = (0.5 * logvar.array()).exp();
  const Eigen::MatrixXd z = mu + sigma.cwiseProduct(eps);
  Eigen::MatrixXd dec_in(lat + batch.condition.rows(), n);
  dec_in << z, batch.condition;
  const Eigen::MatrixXd raw = m.decoder.forward(dec_in, grad ? &dec_cache : nullptr);

  LossTerms out;
  Eigen::MatrixXd d_unit = Eigen::MatrixXd::Zero(raw.rows(), n);
  Eigen::MatrixXd unit(raw.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) unit.col(i) = unit_pairs(raw.col(i));

  const Eigen::MatrixXd diff = unit - batch.x;
  out.recon = diff.squaredNorm() * inv_n;
  out.kl = 0.5 * (mu.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum() * inv_n;
  if (grad) d_unit += (2.0 * m.beta[0] * inv_n) * diff;

  std::vector<Eigen::VectorXcd> u(static_cast<std::size_t>(layers)), g;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int l = 0; l < layers; ++l) {
      u[l].resize(atoms);
      for (int a = 0; a < atoms; ++a) {
        const Eigen::Index at = 2 * (static_cast<Eigen::Index>(l) * atoms + a);
        u[l](a) = cplx(unit(at, i), unit(at + 1, i));
      }
    }
    const LinkSample& s = *batch.samples[static_cast<std::size_t>(i)];
    const double c = link_rate(t, u, s, grad ? &g : nullptr);
    const double e = c - s.capacity;
    out.capacity += e * e * inv_n;
    if (grad) {
      const double w = 2.0 * m.beta[2] * e * inv_n;
      for (int l = 0; l < layers; ++l)
        for (int a = 0; a < atoms; ++a) {
          const Eigen::Index at = 2 * (static_cast<Eigen::Index>(l) * atoms + a);
          d_unit(at, i) += w * g[l](a).real();
          d_unit(at + 1, i) += w * g[l](a).imag();
        }
    }
  }
  out.total = m.beta[0] * out.recon + m.beta[1] * out.kl + m.beta[2] * out.capacity;
  if (!grad) return out;

  // Through the pair normalization.
  Eigen::MatrixXd d_raw(raw.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j + 1 < raw.rows(); j += 2) {
      const double a = raw(j, i);
      const double b = raw(j + 1, i);
      const double r = std::max(std::hypot(a, b), 1e-300);
      const double ga = d_unit(j, i);
      const double gb = d_unit(j + 1, i);
      const double proj = (a * ga + b * gb) / (r * r * r);
      d_raw(j, i) = ga / r - a * proj;
      d_raw(j + 1, i) = gb / r - b * proj;
    }

  auto dec_grads = m.decoder.zero_like();
  const Eigen::MatrixXd d_dec_in = m.decoder.backward(dec_cache, d_raw, dec_grads);
  const Eigen::MatrixXd dz = d_dec_in.topRows(lat);
  Eigen::MatrixXd d_enc_out(2 * lat, n);
  d_enc_out.topRows(lat) = dz + (m.beta[1] * inv_n) * mu;
  d_enc_out.bottomRows(lat) = dz.cwiseProduct(eps).cwiseProduct(0.5 * sigma) +
                              (0.5 * m.beta[1] * inv_n) * (logvar.array().exp() - 1.0).matrix();
  auto enc_grads = m.encoder.zero_like();
  m.encoder.backward(enc_cache, d_enc_out, enc_grads);

  if (grad->size() != m.parameter_count()) *grad = Eigen::VectorXd::Zero(m.parameter_count());
  Eigen::VectorXd flat(m.parameter_count());
  Eigen::Index at = 0;
  pack(enc_grads, flat, at);
  pack(dec_grads, flat, at);
  *grad += flat;
  return out;
}

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd e(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) e(r, c) = rng.normal();
  return e;
}

struct TrainOptions {
  int epochs = 300;
  double learning_rate = 1e-4;
  int batch_size = 64;
  std::uint64_t seed = 1;
  bool calibrate_weights = true;
  double weight_floor = 1e-2;  // smallest term value used when calibrating the betas
};

// Per-feature mean and standard deviation of the raw conditions; constant
// features keep unit scale.
inline void fit_condition_scaling(CvaeModel& m, const std::vector<LinkSample>& data) {
  const int c = m.shape.condition_dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(c);
  for (const auto& s : data) mean += s.condition;
  mean /= static_cast<double>(data.size());
  for (const auto& s : data) sq += (s.condition - mean).cwiseAbs2();
  Eigen::VectorXd sd = (sq / static_cast<double>(data.size())).cwiseSqrt();
  for (int i = 0; i < c; ++i)
    if (!(sd(i) > 1e-12)) sd(i) = 1.0;
  m.cond_mean = mean;
  m.cond_scale = sd;
}

// Mini-batch Adam on the capacity-aware loss. Returns the mean training loss
// of every epoch. On a non-finite loss the best-epoch weights are restored and
// Divergence is thrown; `curve` (when given) keeps the epochs completed so far.
inline std::vector<LossTerms> train_cvae(CvaeModel& m, const std::vector<LinkSample>& data, const TrainOptions& opt,
                                         std::vector<LossTerms>* curve = nullptr,
                                         const std::function<void(int, const LossTerms&)>& on_epoch = {}) {
  if (data.empty()) throw ConfigError("training set is empty");
  for (const auto& s : data)
    if (s.condition.size() != m.shape.condition_dim() ||
        s.phases.size() != static_cast<std::size_t>(m.shape.layers) * m.shape.atoms)
      throw ConfigError("training sample does not match the model shape");
  fit_condition_scaling(m, data);
  const TransferSet t = m.transfers();
  Rng rng(derive_seed({opt.seed, tag_hash("train")}));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  auto shuffle = [&] {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  };
  auto batch_at = [&](std::size_t start) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
    std::vector<const LinkSample*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&data[order[i]]);
    return make_batch(m, ptrs);
  };

  shuffle();
  if (opt.calibrate_weights) {
    m.beta = {1.0, 1.0, 1.0};
    const CvaeBatch first = batch_at(0);
    const LossTerms l = cvae_loss(m, t, first, standard_normal(m.shape.latent, first.x.cols(), rng));
    m.beta = {1.0 / std::max(l.recon, opt.weight_floor), 1.0 / std::max(l.kl, opt.weight_floor),
              1.0 / std::max(l.capacity, opt.weight_floor)};
  }

  Eigen::VectorXd params = m.parameters();
  Eigen::VectorXd best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  Adam adam(params.size(), opt.learning_rate);
  std::vector<LossTerms> local;
  std::vector<LossTerms>& out = curve ? *curve : local;
  out.clear();
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (epoch > 0) shuffle();
    LossTerms acc;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
      const CvaeBatch b = batch_at(start);
      grad.setZero(params.size());
      const LossTerms l = cvae_loss(m, t, b, standard_normal(m.shape.latent, b.x.cols(), rng), &grad);
      if (!std::isfinite(l.total) || !grad.allFinite()) {
        m.set_parameters(best);
        throw Divergence("training loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      const double w = static_cast<double>(b.x.cols()) / static_cast<double>(order.size());
      acc.total += w * l.total;
      acc.recon += w * l.recon;
      acc.kl += w * l.kl;
      acc.capacity += w * l.capacity;
      adam.step(params, grad);
      m.set_parameters(params);
    }
    out.push_back(acc);
    if (acc.total < best_loss) {
      best_loss = acc.total;
      best = params;
    }
    if (on_epoch) on_epoch(epoch + 1, acc);
  }
  return out;
}

// One decoder pass with z drawn from the prior.
inline std::vector<double> generate_link_phases(const CvaeModel& m, const Eigen::VectorXd& raw_condition, Rng& rng) {
  const Eigen::VectorXd c = m.normalize(raw_condition);
  Eigen::VectorXd in(m.shape.latent + c.size());
  for (int i = 0; i < m.shape.latent; ++i) in(i) = rng.normal();
  in.tail(c.size()) = c;
  return decode_phases(unit_pairs(m.decoder.forward(in).col(0)));
}

// Phases for every associated UAV of a scenario; idle UAVs keep `current`.
inline PhaseTensor generate_phases(const CvaeModel& m, const Scenario& s, const AssociationMatrix& assoc,
                                   const ChannelRealization& c, PhaseTensor current, Rng& rng) {
  for (int u = 0; u < s.uav_count(); ++u) {
    const int k = assoc.served_user(u);
    if (k < 0) continue;
    const auto th = generate_link_phases(m, link_condition(s, c, u, k), rng);
    for (int l = 0; l < m.shape.layers; ++l)
      current.set_layer(u, l, std::span<const double>(th).subspan(static_cast<std::size_t>(l) * m.shape.atoms,
                                                                  static_cast<std::size_t>(m.shape.atoms)));
  }
  return current;
}

inline bool model_matches(const CvaeModel& m, const Scenario& s) {
  return m.shape.layers == s.sim.layers && m.shape.atoms == s.sim.atoms && m.shape.users == s.user_count() &&
         std::abs(m.thickness - s.sim.thickness) <= 1e-12 * s.sim.thickness &&
         std::abs(m.wavelength - s.radio.wavelength) <= 1e-12 * s.radio.wavelength;
}

// Checkpoint: magic, format version, shape, geometry, betas, condition
// scaling, then every layer (rows, cols, weights column-major, bias).
// Little-endian host layout.
namespace detail {

inline constexpr char kCheckpointMagic[8] = {'U', 'A', 'V', 'S', 'C', 'V', 'A', 'E'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& i) {
  T v{};
  i.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!i) throw ConfigError("truncated binary file");
  return v;
}

inline void put_vector(std::ostream& o, const Eigen::VectorXd& v) {
  put<std::int64_t>(o, v.size());
  o.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline Eigen::VectorXd get_vector(std::istream& i) {
  const auto n = get<std::int64_t>(i);
  if (n < 0 || n > (1LL << 32)) throw ConfigError("corrupt vector length");
  Eigen::VectorXd v(n);
  i.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!i) throw ConfigError("truncated binary file");
  return v;
}

inline void put_mlp(std::ostream& o, const Mlp& net) {
  put<std::int32_t>(o, static_cast<std::int32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    put<std::int64_t>(o, l.weight.rows());
    put<std::int64_t>(o, l.weight.cols());
    o.write(reinterpret_cast<const char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
    put_vector(o, l.bias);
  }
}

inline Mlp get_mlp(std::istream& i) {
  Mlp net;
  const auto count = get<std::int32_t>(i);
  if (count < 1 || count > 64) throw ConfigError("corrupt layer count");
  for (int k = 0; k < count; ++k) {
    DenseLayer l;
    const auto rows = get<std::int64_t>(i);
    const auto cols = get<std::int64_t>(i);
    if (rows < 1 || cols < 1 || rows * cols > (1LL << 30)) throw ConfigError("corrupt layer shape");
    l.weight.resize(rows, cols);
    i.read(reinterpret_cast<char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
    l.bias = get_vector(i);
    if (!i || l.bias.size() != rows) throw ConfigError("corrupt layer data");
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace detail

inline void save_checkpoint(const CvaeModel& m, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw ConfigError("cannot write checkpoint " + path);
  o.write(detail::kCheckpointMagic, 8);
  detail::put(o, detail::kCheckpointVersion);
  for (int v : {m.shape.layers, m.shape.atoms, m.shape.users, m.shape.condition_dim(), m.shape.latent, m.shape.hidden,
                m.shape.depth})
    detail::put<std::int32_t>(o, v);
  detail::put(o, m.thickness);
  detail::put(o, m.wavelength);
  for (double b : m.beta) detail::put(o, b);
  detail::put_vector(o, m.cond_mean);
  detail::put_vector(o, m.cond_scale);
  detail::put_mlp(o, m.encoder);
  detail::put_mlp(o, m.decoder);
  if (!o) throw ConfigError("failed writing checkpoint " + path);
}

inline CvaeModel load_checkpoint(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw ConfigError("cannot open checkpoint " + path);
  char magic[8];
  i.read(magic, 8);
  if (!i || !std::equal(magic, magic + 8, detail::kCheckpointMagic)) throw ConfigError(path + " is not a CVAE checkpoint");
  if (detail::get<std::uint32_t>(i) != detail::kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
  CvaeModel m;
  m.shape.layers = detail::get<std::int32_t>(i);
  m.shape.atoms = detail::get<std::int32_t>(i);
  m.shape.users = detail::get<std::int32_t>(i);
  m.shape.condition = detail::get<std::int32_t>(i);
  m.shape.latent = detail::get<std::int32_t>(i);
  m.shape.hidden = detail::get<std::int32_t>(i);
  m.shape.depth = detail::get<std::int32_t>(i);
  m.thickness = detail::get<double>(i);
  m.wavelength = detail::get<double>(i);
  for (double& b : m.beta) b = detail::get<double>(i);
  m.cond_mean = detail::get_vector(i);
  m.cond_scale = detail::get_vector(i);
  m.encoder = detail::get_mlp(i);
  m.decoder = detail::get_mlp(i);
  const int c = m.shape.condition_dim();
  if (m.cond_mean.size() != c || m.cond_scale.size() != c || m.encoder.input_size() != m.shape.phase_dim() + c ||
      m.decoder.output_size() != m.shape.phase_dim() || m.decoder.input_size() != m.shape.latent + c ||
      m.encoder.output_size() != 2 * m.shape.latent)
    throw ConfigError("checkpoint shapes are inconsistent");
  return m;
}

}  // namespace uavsim
