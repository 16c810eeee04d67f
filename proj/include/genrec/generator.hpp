#pragma once

// Layered affine-plus-activation generator G : R^k -> R^n and its Jacobian.
//
//   G(z) = a(W_d a(W_{d-1} ... a(W_1 z + b_1) ... + b_{d-1}) + b_d)
//
// The activation is applied after every affine stage, including the last.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genrec/errors.hpp"
#include "genrec/numerics.hpp"
#include "genrec/random.hpp"

namespace genrec {

enum class ActivationKind { identity, relu, leaky_relu };

inline constexpr double kDefaultLeak = 0.2;

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double leak = 0.0;  // slope on the negative side; only meaningful for leaky_relu

  static Activation identity() { return {ActivationKind::identity, 0.0}; }
  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double h = kDefaultLeak) {
    if (!(h > 0.0 && h < 1.0)) throw InvalidInput("leaky_relu: leak must lie in (0, 1)");
    return {ActivationKind::leaky_relu, h};
  }

  template <typename Scalar>
  Scalar apply(Scalar x) const {
    switch (kind) {
      case ActivationKind::identity: return x;
      case ActivationKind::relu: return x >= Scalar(0) ? x : Scalar(0);
      case ActivationKind::leaky_relu: return x >= Scalar(0) ? x : Scalar(leak) * x;
    }
    return x;
  }

  // Right derivative: the kink at 0 takes the positive-side slope 1.
  template <typename Scalar>
  Scalar derivative(Scalar x) const {
    switch (kind) {
      case ActivationKind::identity: return Scalar(1);
      case ActivationKind::relu: return x >= Scalar(0) ? Scalar(1) : Scalar(0);
      case ActivationKind::leaky_relu: return x >= Scalar(0) ? Scalar(1) : Scalar(leak);
    }
    return Scalar(1);
  }

  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string_view to_string(ActivationKind kind);
/// Accepts "identity", "relu", "leaky_relu" (and "leaky" as a CLI alias).
ActivationKind parse_activation_kind(std::string_view name);

template <typename Scalar>
struct Layer {
  Mat<Scalar> weight;  // n_i x n_{i-1}
  Vec<Scalar> bias;    // n_i
  Activation activation;
};

template <typename Scalar>
class BasicGeneratorNet {
 public:
  using LayerType = Layer<Scalar>;

  explicit BasicGeneratorNet(std::vector<LayerType> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("generator: at least one layer required");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& L = layers_[i];
      const std::string tag = "layer " + std::to_string(i + 1);
      if (L.weight.rows() < 1 || L.weight.cols() < 1) throw ShapeError(tag + ": empty weight");
      if (L.bias.size() != L.weight.rows())
        throw ShapeError(tag + ": bias length " + std::to_string(L.bias.size()) +
                         " != weight rows " + std::to_string(L.weight.rows()));
      if (i > 0 && L.weight.cols() != layers_[i - 1].weight.rows())
        throw ShapeError(tag + ": expected " + std::to_string(layers_[i - 1].weight.rows()) +
                         " columns, got " + std::to_string(L.weight.cols()));
    }
  }

  const std::vector<LayerType>& layers() const { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  Index input_dim() const { return layers_.front().weight.cols(); }
  Index output_dim() const { return layers_.back().weight.rows(); }

  /// [k, n_1, ..., n]
  std::vector<Index> dims() const {
    std::vector<Index> d{input_dim()};
    for (const auto& L : layers_) d.push_back(L.weight.rows());
    return d;
  }

  /// The shared activation when every layer uses the same one.
  std::optional<Activation> uniform_activation() const {
    for (const auto& L : layers_)
      if (!(L.activation == layers_.front().activation)) return std::nullopt;
    return layers_.front().activation;
  }

  /// Hidden widths n_i >= k and output n > k.
  bool satisfies_theory_dims() const {
    const Index k = input_dim();
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
      if (layers_[i].weight.rows() < k) return false;
    return output_dim() > k;
  }

 private:
  std::vector<LayerType> layers_;
};

using GeneratorNet = BasicGeneratorNet<double>;

namespace detail {

template <typename Scalar, typename Derived>
void require_latent(const BasicGeneratorNet<Scalar>& net, const Eigen::MatrixBase<Derived>& z) {
  if (z.size() != net.input_dim())
    throw ShapeError("generator: latent length " + std::to_string(z.size()) + " != k = " +
                     std::to_string(net.input_dim()));
}

}  // namespace detail

/// Pre-activation of every layer at z (u_i = W_i a_{i-1} + b_i).
template <typename Scalar, typename Derived>
std::vector<Vec<Scalar>> pre_activations(const BasicGeneratorNet<Scalar>& net,
                                         const Eigen::MatrixBase<Derived>& z) {
  detail::require_latent(net, z);
  std::vector<Vec<Scalar>> pre;
  pre.reserve(net.depth());
  Vec<Scalar> h = z;
  for (const auto& L : net.layers()) {
    pre.push_back(L.weight * h + L.bias);
    const auto& act = L.activation;
    h = pre.back().unaryExpr([&act](Scalar v) { return act.apply(v); });
  }
  return pre;
}

template <typename Scalar, typename Derived>
Vec<Scalar> forward(const BasicGeneratorNet<Scalar>& net, const Eigen::MatrixBase<Derived>& z) {
  detail::require_latent(net, z);
  Vec<Scalar> h = z;
  for (const auto& L : net.layers()) {
    const auto& act = L.activation;
    h = (L.weight * h + L.bias).unaryExpr([&act](Scalar v) { return act.apply(v); });
  }
  return h;
}

/// dG/dz = D_d W_d ... D_1 W_1 with D_i the activation slope at layer i's pre-activation.
template <typename Scalar, typename Derived>
Mat<Scalar> jacobian(const BasicGeneratorNet<Scalar>& net, const Eigen::MatrixBase<Derived>& z) {
  detail::require_latent(net, z);
  Mat<Scalar> jac = Mat<Scalar>::Identity(net.input_dim(), net.input_dim());
  Vec<Scalar> h = z;
  for (const auto& L : net.layers()) {
    const Vec<Scalar> u = L.weight * h + L.bias;
    const auto& act = L.activation;
    const Vec<Scalar> slope = u.unaryExpr([&act](Scalar v) { return act.derivative(v); });
    jac = slope.asDiagonal() * (L.weight * jac);
    h = u.unaryExpr([&act](Scalar v) { return act.apply(v); });
  }
  return jac;
}

/// W = W_d ... W_1 for identity-activation nets; biases are ignored since they
/// cancel in any difference G(z) - G(z').
template <typename Scalar>
Mat<Scalar> composite_weight(const BasicGeneratorNet<Scalar>& net) {
  for (const auto& L : net.layers())
    if (L.activation.kind != ActivationKind::identity)
      throw UnsupportedOperation("composite_weight: requires identity activation in every layer");
  Mat<Scalar> w = net.layers().front().weight;
  for (std::size_t i = 1; i < net.depth(); ++i) w = net.layers()[i].weight * w;
  return w;
}

enum class BiasInit { zero, gaussian };

/// dims = [k, n_1, ..., n]. Weights are drawn first (layer order, row-major),
/// then biases, so toggling BiasInit leaves the weights unchanged.
template <typename Scalar = double>
BasicGeneratorNet<Scalar> init_gaussian(const std::vector<Index>& dims, const Activation& activation,
                                        Seed seed, BiasInit bias = BiasInit::zero) {
  if (dims.size() < 2) throw InvalidInput("init_gaussian: dims needs at least [k, n]");
  for (Index d : dims)
    if (d < 1) throw InvalidInput("init_gaussian: every dimension must be >= 1");
  Rng rng(seed);
  std::vector<Layer<Scalar>> layers;
  for (std::size_t i = 1; i < dims.size(); ++i)
    layers.push_back({gaussian_matrix<Scalar>(dims[i], dims[i - 1], rng),
                      Vec<Scalar>::Zero(dims[i]), activation});
  if (bias == BiasInit::gaussian)
    for (auto& L : layers) L.bias = gaussian_vector<Scalar>(L.bias.size(), rng);
  return BasicGeneratorNet<Scalar>(std::move(layers));
}

}  // namespace genrec
