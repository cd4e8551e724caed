#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Layer widths of a dense ReLU network: input, hidden..., output.
/// Hidden layers use ReLU, the output layer is affine.
struct MlpSpec {
  std::vector<int> layer_dims;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t layer_count() const { return layer_dims.size() - 1; }

  void validate() const {
    if (layer_dims.size() < 2)
      throw std::invalid_argument("MlpSpec: need at least input and output dims");
    for (int d : layer_dims)
      if (d < 1) throw std::invalid_argument("MlpSpec: layer dims must be >= 1");
  }

  bool operator==(const MlpSpec&) const = default;
};

std::string to_string(const MlpSpec& spec);

/// Weights are stored as (out x in) so a layer is `W * x + b`.
template <typename Scalar>
struct Mlp {
  MlpSpec spec;
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  bool operator==(const Mlp& other) const {
    if (spec != other.spec) return false;
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    return true;
  }
};

using QNetwork = Mlp<double>;

template <typename Scalar>
Mlp<Scalar> zero_network(const MlpSpec& spec) {
  spec.validate();
  Mlp<Scalar> net{spec, {}, {}};
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    net.weights.push_back(Matrix<Scalar>::Zero(spec.layer_dims[l + 1], spec.layer_dims[l]));
    net.biases.push_back(Vector<Scalar>::Zero(spec.layer_dims[l + 1]));
  }
  return net;
}

/// He-uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)], zero biases.
template <typename Scalar, typename Rng>
Mlp<Scalar> init_network(const MlpSpec& spec, Rng& rng) {
  Mlp<Scalar> net = zero_network<Scalar>(spec);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.layer_dims[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto& w = net.weights[l];
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = static_cast<Scalar>(dist(rng));
  }
  return net;
}

template <typename Scalar>
bool same_shape(const Mlp<Scalar>& a, const Mlp<Scalar>& b) {
  return a.spec == b.spec;
}

template <typename Scalar>
bool all_finite(const Mlp<Scalar>& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    if (!net.weights[l].allFinite() || !net.biases[l].allFinite()) return false;
  return true;
}

namespace detail {

inline void check_input_rows(const MlpSpec& spec, Eigen::Index rows) {
  if (rows != spec.input_dim())
    throw std::invalid_argument("input has " + std::to_string(rows) + " rows, network expects " +
                                std::to_string(spec.input_dim()));
}

}  // namespace detail

/// Q-values for one input.
template <typename Scalar>
Vector<Scalar> forward(const Mlp<Scalar>& net, const Vector<Scalar>& x) {
  detail::check_input_rows(net.spec, x.rows());
  Vector<Scalar> a = x;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Vector<Scalar> z = net.weights[l] * a + net.biases[l];
    a = (l == last) ? z : Vector<Scalar>(z.cwiseMax(Scalar(0)));
  }
  return a;
}

/// Column-wise forward pass: one sample per column of `x`.
template <typename Scalar>
Matrix<Scalar> forward_batch(const Mlp<Scalar>& net, const Matrix<Scalar>& x) {
  detail::check_input_rows(net.spec, x.rows());
  Matrix<Scalar> a = x;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Matrix<Scalar> z = net.weights[l] * a;
    z.colwise() += net.biases[l];
    a = (l == last) ? std::move(z) : Matrix<Scalar>(z.cwiseMax(Scalar(0)));
  }
  return a;
}

/// Mean over the batch of 0.5 * (Q(x_i)[a_i] - y_i)^2 and its gradient.
/// Only the chosen output of each sample carries error; `grad` is resized
/// to the network shape and overwritten.
template <typename Scalar>
Scalar backward_batch(const Mlp<Scalar>& net, const Matrix<Scalar>& x, std::span<const int> actions,
                      std::span<const Scalar> targets, Mlp<Scalar>& grad) {
  detail::check_input_rows(net.spec, x.rows());
  const Eigen::Index batch = x.cols();
  if (static_cast<Eigen::Index>(actions.size()) != batch ||
      static_cast<Eigen::Index>(targets.size()) != batch)
    throw std::invalid_argument("backward_batch: actions/targets must match batch size");
  if (batch == 0) throw std::invalid_argument("backward_batch: empty batch");

  const std::size_t layers = net.weights.size();
  std::vector<Matrix<Scalar>> acts;
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix<Scalar> z = net.weights[l] * acts.back();
    z.colwise() += net.biases[l];
    if (l + 1 < layers) z = z.cwiseMax(Scalar(0));
    acts.push_back(std::move(z));
  }

  const Matrix<Scalar>& q = acts.back();
  Matrix<Scalar> delta = Matrix<Scalar>::Zero(q.rows(), batch);
  Scalar loss(0);
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.rows()) throw std::invalid_argument("backward_batch: action index out of range");
    const Scalar residual = q(a, i) - targets[static_cast<std::size_t>(i)];
    loss += Scalar(0.5) * residual * residual;
    delta(a, i) = residual * inv_batch;
  }

  if (!same_shape(grad, net)) grad = zero_network<Scalar>(net.spec);
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = delta * acts[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix<Scalar> back = net.weights[l].transpose() * delta;
    // ReLU derivative: the stored activation is positive exactly where z > 0
    delta = back.cwiseProduct((acts[l].array() > Scalar(0)).template cast<Scalar>().matrix());
  }
  return loss * inv_batch;
}

/// Single-sample loss 0.5 * (Q(x)[action] - target)^2 and its exact gradient.
template <typename Scalar>
Scalar backward(const Mlp<Scalar>& net, const Vector<Scalar>& x, int action, Scalar target,
                Mlp<Scalar>& grad) {
  detail::check_input_rows(net.spec, x.rows());
  const int act[1] = {action};
  const Scalar tgt[1] = {target};
  return backward_batch<Scalar>(net, Matrix<Scalar>(x), act, tgt, grad);
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  long step_count = 0;
  Mlp<Scalar> first_moment;
  Mlp<Scalar> second_moment;
};

template <typename Scalar>
AdamState<Scalar> make_adam(const MlpSpec& spec, const AdamConfig& config = {}) {
  return {config, 0, zero_network<Scalar>(spec), zero_network<Scalar>(spec)};
}

/// One bias-corrected Adam update of `net` in place.
template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const Mlp<Scalar>& grad, AdamState<Scalar>& state) {
  if (!same_shape(net, grad) || !same_shape(net, state.first_moment) ||
      !same_shape(net, state.second_moment))
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!all_finite(grad)) throw std::domain_error("adam_step: non-finite gradient");

  const auto& c = state.config;
  ++state.step_count;
  const Scalar b1(c.beta1), b2(c.beta2);
  const Scalar corr1 = Scalar(1) - Scalar(std::pow(c.beta1, static_cast<double>(state.step_count)));
  const Scalar corr2 = Scalar(1) - Scalar(std::pow(c.beta2, static_cast<double>(state.step_count)));
  const Scalar lr(c.learning_rate), eps(c.epsilon);

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    update(net.weights[l], grad.weights[l], state.first_moment.weights[l], state.second_moment.weights[l]);
    update(net.biases[l], grad.biases[l], state.first_moment.biases[l], state.second_moment.biases[l]);
  }
}

}  // namespace tsc
