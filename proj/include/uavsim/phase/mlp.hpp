#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "uavsim/random.hpp"

namespace uavsim {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Fully connected network, tanh on hidden layers and a linear output. Batches
// are column-major: one sample per column.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input of every layer
  };

  Mlp() = default;

  // sizes = {in, hidden..., out}; Glorot-uniform weights, zero biases.
  Mlp(const std::vector<int>& sizes, Rng& rng) {
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      DenseLayer l;
      const double a = std::sqrt(6.0 / (sizes[i] + sizes[i + 1]));
      l.weight.resize(sizes[i + 1], sizes[i]);
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = rng.uniform(-a, a);
      l.bias = Eigen::VectorXd::Zero(sizes[i + 1]);
      layers.push_back(std::move(l));
    }
  }

  int input_size() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int output_size() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
    if (cache) cache->inputs.clear();
    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (cache) cache->inputs.push_back(a);
      Eigen::MatrixXd z = layers[i].weight * a;
      z.colwise() += layers[i].bias;
      a = i + 1 < layers.size() ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
    return a;
  }

  // Accumulates parameter gradients into `grads` (same shapes as `layers`) and
  // returns the gradient with respect to the network input.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_out, std::vector<DenseLayer>& grads) const {
    Eigen::MatrixXd d = d_out;
    for (std::size_t i = layers.size(); i-- > 0;) {
      const Eigen::MatrixXd& in = cache.inputs[i];
      grads[i].weight.noalias() += d * in.transpose();
      grads[i].bias += d.rowwise().sum();
      Eigen::MatrixXd d_in = layers[i].weight.transpose() * d;
      if (i > 0) d_in.array() *= 1.0 - in.array().square();
      d = std::move(d_in);
    }
    return d;
  }

  std::vector<DenseLayer> zero_like() const {
    std::vector<DenseLayer> g;
    for (const auto& l : layers)
      g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    return g;
  }

  std::vector<DenseLayer> layers;
};

inline Eigen::Index parameter_count(const std::vector<DenseLayer>& layers) {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

// Parameters in a fixed order: per layer the weight (column-major) then the bias.
inline void pack(const std::vector<DenseLayer>& layers, Eigen::VectorXd& out, Eigen::Index& at) {
  for (const auto& l : layers) {
    out.segment(at, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
}

inline void unpack(const Eigen::VectorXd& in, std::vector<DenseLayer>& layers, Eigen::Index& at) {
  for (auto& l : layers) {
    Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()) = in.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = in.segment(at, l.bias.size());
    at += l.bias.size();
  }
}

// First-order adaptive-moment optimizer over a flat parameter vector.
class Adam {
 public:
  explicit Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  double lr_, b1_, b2_, eps_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

}  // namespace uavsim
