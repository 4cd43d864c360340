#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "slrobust/core/affine.hpp"
#include "slrobust/core/error.hpp"

namespace slrobust::toytrain {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // added to the gradient (coupled L2)
  std::size_t total_steps = 1;
};

/// lr0 * (1 + cos(pi * t / total)) / 2
inline double cosine_lr(double lr0, std::size_t t, std::size_t total) {
  if (total == 0) return lr0;
  const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(total));
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One Adam update at step t (1-based) with bias correction and the cosine
/// learning-rate schedule.
template <ParameterSet P>
void adam_step(P& params, const P& grads, AdamState& state, std::size_t t, const AdamConfig& cfg) {
  if (t < 1) throw ValidationError("Adam step counter starts at 1");
  auto ps = params.tensors();
  auto gs = grads.tensors();
  if (ps.size() != gs.size()) throw ShapeError("parameter and gradient sets differ");
  for (auto g : gs)
    if (!all_finite(g)) throw NumericError("non-finite gradient passed to Adam");
  if (state.m.empty()) {
    for (auto p : ps) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != ps.size()) throw ShapeError("Adam state does not match parameters");

  const double lr = cosine_lr(cfg.lr, t, cfg.total_steps);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto p = ps[k];
    auto g = gs[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * p[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
  }
}

}  // namespace slrobust::toytrain
