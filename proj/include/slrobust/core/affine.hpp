#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "slrobust/core/error.hpp"
#include "slrobust/core/matrix.hpp"
#include "slrobust/core/rng.hpp"

namespace slrobust {

/// Anything that exposes its trainable tensors as a flat list of spans, in a
/// fixed order. Optimizers, momentum updates and serializers work on this.
template <typename P>
concept ParameterSet = requires(P& p, const P& cp) {
  { p.tensors() } -> std::same_as<std::vector<std::span<double>>>;
  { cp.tensors() } -> std::same_as<std::vector<std::span<const double>>>;
};

enum class Activation { relu, identity };

inline double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : z;
}

inline double activate_grad(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

/// y = W x + b with W stored (out x in).
struct Affine {
  Matrix weight;
  std::vector<double> bias;

  Affine() = default;
  Affine(std::size_t in, std::size_t out) : weight(out, in), bias(out, 0.0) {}

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static Affine init(std::size_t in, std::size_t out, Rng& rng) {
    Affine a(in, out);
    const double r = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : a.weight.data()) w = rng.uniform(-r, r);
    for (double& b : a.bias) b = rng.uniform(-r, r);
    return a;
  }

  static Affine identity(std::size_t n) {
    Affine a(n, n);
    for (std::size_t i = 0; i < n; ++i) a.weight(i, i) = 1.0;
    return a;
  }

  Affine zeros_like() const { return Affine(in_dim(), out_dim()); }

  std::vector<double> forward(std::span<const double> x) const {
    if (x.size() != in_dim())
      throw ShapeError("affine input has " + std::to_string(x.size()) + " entries, expected " +
                       std::to_string(in_dim()));
    std::vector<double> y(bias);
    const std::size_t in = in_dim();
    const double* w = weight.data().data();
    for (std::size_t o = 0; o < y.size(); ++o) {
      double acc = 0.0;
      const double* wr = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * x[i];
      y[o] += acc;
    }
    return y;
  }

  /// Accumulates dW += dy x^T and db += dy into `grad`; returns W^T dy.
  std::vector<double> backward(std::span<const double> x, std::span<const double> dy,
                               Affine& grad) const {
    const std::size_t in = in_dim();
    std::vector<double> dx(in, 0.0);
    const double* w = weight.data().data();
    double* gw = grad.weight.data().data();
    for (std::size_t o = 0; o < dy.size(); ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      grad.bias[o] += g;
      const double* wr = w + o * in;
      double* gr = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gr[i] += g * x[i];
        dx[i] += g * wr[i];
      }
    }
    return dx;
  }

  std::vector<std::span<double>> tensors() { return {weight.data(), bias}; }
  std::vector<std::span<const double>> tensors() const { return {weight.data(), bias}; }

  friend bool operator==(const Affine&, const Affine&) = default;
};

template <ParameterSet P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  for (auto t : p.tensors()) n += t.size();
  return n;
}

/// dst += scale * src, tensor by tensor.
template <ParameterSet P>
void axpy(P& dst, const P& src, double scale) {
  auto d = dst.tensors();
  auto s = src.tensors();
  if (d.size() != s.size()) throw ShapeError("parameter sets differ in tensor count");
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k].size() != s[k].size()) throw ShapeError("parameter tensors differ in size");
    for (std::size_t i = 0; i < d[k].size(); ++i) d[k][i] += scale * s[k][i];
  }
}

}  // namespace slrobust
