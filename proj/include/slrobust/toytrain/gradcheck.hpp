#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slrobust/core/matrix.hpp"
#include "slrobust/core/rng.hpp"
#include "slrobust/ctc/ctc.hpp"
#include "slrobust/dae/dae.hpp"
#include "slrobust/toytrain/model.hpp"
#include "slrobust/toytrain/objective.hpp"

// Central finite-difference checks of every hand-derived gradient in the
// library, on seeded random instances.
namespace slrobust::gradcheck {

struct FdOptions {
  double step = 1e-5;
  std::size_t instances = 100;
  std::uint64_t seed = 0;
};

/// Gradients smaller than this are compared in absolute terms.
inline constexpr double kRelFloor = 1e-4;

inline double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
  return std::abs(analytic - numeric) / scale;
}

struct ComponentReport {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // coordinates compared
  std::size_t skipped = 0;  // coordinates whose stencil crossed a kink
  std::size_t instances = 0;
};

using Signature = std::vector<signed char>;

/// Compares `analytic[i]` with the central difference of `loss` in `x[i]` for
/// every coordinate. When `signature` is given, a coordinate is skipped if
/// either stencil point changes it.
inline void check_coordinates(std::span<double> x, std::span<const double> analytic,
                              const std::function<double()>& loss,
                              const std::function<Signature()>& signature, double step,
                              ComponentReport& rep) {
  const Signature base = signature ? signature() : Signature{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = loss();
    const bool kink_p = signature && signature() != base;
    x[i] = orig - step;
    const double fm = loss();
    const bool kink_m = signature && signature() != base;
    x[i] = orig;
    if (kink_p || kink_m) {
      ++rep.skipped;
      continue;
    }
    rep.max_rel_error = std::max(rep.max_rel_error, rel_error(analytic[i], (fp - fm) / (2.0 * step)));
    ++rep.checked;
  }
}

namespace detail {

inline std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Away from zero norm so the cosine is well conditioned.
inline std::vector<double> random_latent(Rng& rng, std::size_t n) {
  for (;;) {
    auto v = random_vec(rng, n);
    double s = 0.0;
    for (double x : v) s += x * x;
    if (s > 0.25) return v;
  }
}

}  // namespace detail

inline ComponentReport check_sim_pos(const FdOptions& o) {
  ComponentReport rep{"sim_pos"};
  Rng rng(derive_seed(o.seed, "sim_pos"));
  for (std::size_t k = 0; k < o.instances; ++k) {
    const std::size_t d = 2 + rng.index(7);
    auto x1 = detail::random_latent(rng, d);
    auto x2 = detail::random_latent(rng, d);
    const auto g = dae::sim_pos_grad(x1, x2);
    auto f = [&] { return dae::sim_pos(x1, x2); };
    check_coordinates(x1, g.d_x1, f, {}, o.step, rep);
    check_coordinates(x2, g.d_x2, f, {}, o.step, rep);
    ++rep.instances;
  }
  return rep;
}

/// Instances are drawn on the active side of the hinge (cosine above margin).
inline ComponentReport check_sim_neg(const FdOptions& o, double margin = 0.5) {
  ComponentReport rep{"sim_neg"};
  Rng rng(derive_seed(o.seed, "sim_neg"));
  while (rep.instances < o.instances) {
    const std::size_t d = 2 + rng.index(7);
    auto x1 = detail::random_latent(rng, d);
    auto x2 = x1;
    for (double& v : x2) v += rng.uniform(-0.3, 0.3);
    if (dae::cosine(x1, x2) <= margin + 0.01) continue;
    const auto g = dae::sim_neg_grad(x1, x2, margin);
    auto f = [&] { return dae::sim_neg(x1, x2, margin); };
    auto sig = [&] { return Signature{static_cast<signed char>(dae::cosine(x1, x2) > margin)}; };
    check_coordinates(x1, g.d_x1, f, sig, o.step, rep);
    check_coordinates(x2, g.d_x2, f, sig, o.step, rep);
    ++rep.instances;
  }
  return rep;
}

/// loss_sim with respect to the student latent (both halves), across both
/// sides of the margin.
inline ComponentReport check_loss_sim(const FdOptions& o, double margin = 0.5) {
  ComponentReport rep{"loss_sim"};
  Rng rng(derive_seed(o.seed, "loss_sim"));
  for (std::size_t k = 0; k < o.instances; ++k) {
    const std::size_t half = 1 + rng.index(5);
    dae::LatentPair hq{detail::random_latent(rng, half), detail::random_latent(rng, half)};
    dae::LatentPair hk{detail::random_latent(rng, half), detail::random_latent(rng, half)};
    if (rng.bernoulli(0.5))
      for (std::size_t i = 0; i < half; ++i) hk.background[i] = hq.background[i] + rng.uniform(-0.2, 0.2);
    const auto gp = dae::sim_pos_grad(hq.signer, hk.signer);
    const auto gn = dae::sim_neg_grad(hq.background, hk.background, margin);
    auto f = [&] { return dae::loss_sim(hq, hk, margin); };
    auto sig = [&] {
      return Signature{static_cast<signed char>(dae::cosine(hq.background, hk.background) > margin)};
    };
    check_coordinates(hq.signer, gp.d_x1, f, sig, o.step, rep);
    check_coordinates(hq.background, gn.d_x1, f, sig, o.step, rep);
    ++rep.instances;
  }
  return rep;
}

/// loss_rec with respect to all four of its inputs.
inline ComponentReport check_loss_rec(const FdOptions& o) {
  ComponentReport rep{"loss_rec"};
  Rng rng(derive_seed(o.seed, "loss_rec"));
  for (std::size_t k = 0; k < o.instances; ++k) {
    const std::size_t D = 1 + rng.index(8);
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 4; ++i) x.push_back(detail::random_vec(rng, D));
    auto loss = [&] { return dae::loss_rec(x[0], x[1], x[2], x[3]); };
    auto sig = [&] {
      Signature s;
      for (std::size_t i = 0; i < D; ++i) {
        s.push_back(static_cast<signed char>(dae::l1_sign(x[0][i] - x[1][i])));
        s.push_back(static_cast<signed char>(dae::l1_sign(x[2][i] - x[3][i])));
      }
      return s;
    };
    std::vector<std::vector<double>> g(4, std::vector<double>(D));
    for (std::size_t i = 0; i < D; ++i) {
      g[0][i] = dae::l1_sign(x[0][i] - x[1][i]);
      g[1][i] = -g[0][i];
      g[2][i] = dae::l1_sign(x[2][i] - x[3][i]);
      g[3][i] = -g[2][i];
    }
    for (int i = 0; i < 4; ++i) check_coordinates(x[i], g[i], loss, sig, o.step, rep);
    ++rep.instances;
  }
  return rep;
}

/// L_sim + L_rec through the encoder and shared decoder, with respect to every
/// DAE parameter and the student feature.
inline ComponentReport check_dae(const FdOptions& o) {
  ComponentReport rep{"dae"};
  Rng rng(derive_seed(o.seed, "dae"));
  dae::LossConfig cfg;
  for (std::size_t k = 0; k < o.instances; ++k) {
    const std::size_t D = 2 * (2 + rng.index(3));
    dae::DaeParams p = dae::DaeParams::init(D, rng, D, D);
    const dae::DaeParams teacher = dae::DaeParams::init(D, rng, D, D);
    auto f_q = detail::random_vec(rng, D);
    const auto tv = dae::teacher_view(teacher, detail::random_vec(rng, D));
    auto fw = dae::dae_forward(p, f_q, tv, cfg);
    const auto g = dae::dae_backward(p, fw, tv, cfg);
    auto loss = [&] {
      const auto x = dae::dae_forward(p, f_q, tv, cfg);
      return x.l_sim + x.l_rec;
    };
    auto sig = [&] { return dae::dae_forward(p, f_q, tv, cfg).kink_signature(tv); };
    auto params = p.tensors();
    auto grads = g.params.tensors();
    for (std::size_t t = 0; t < params.size(); ++t)
      check_coordinates(params[t], grads[t], loss, sig, o.step, rep);
    check_coordinates(f_q, g.d_f_q, loss, sig, o.step, rep);
    ++rep.instances;
  }
  return rep;
}

inline ComponentReport check_ctc(const FdOptions& o) {
  ComponentReport rep{"ctc_grad"};
  Rng rng(derive_seed(o.seed, "ctc"));
  while (rep.instances < o.instances) {
    const std::size_t T = 1 + rng.index(8);
    const std::size_t V = 2 + rng.index(4);
    ctc::TargetSeq target(rng.index(4));
    for (auto& l : target) l = 1 + rng.index(V - 1);
    if (ctc::min_frames(target) > T) continue;
    Matrix logits(T, V);
    for (double& v : logits.data()) v = rng.uniform(-3.0, 3.0);
    const Matrix g = ctc::ctc_grad(logits, target);
    check_coordinates(logits.data(), g.data(), [&] { return ctc::ctc_loss(logits, target); }, {},
                      o.step, rep);
    ++rep.instances;
  }
  return rep;
}

/// Total toy objective of one micro clip with respect to every student
/// parameter, teacher held fixed.
inline ComponentReport check_end_to_end(const FdOptions& o) {
  using namespace toytrain;
  ComponentReport rep{"end_to_end"};
  Rng rng(derive_seed(o.seed, "end_to_end"));
  ModelConfig mc;
  mc.frame_size = 4;
  mc.pool = 2;
  mc.hidden = 6;
  mc.feature_dim = 8;
  mc.latent_dim = 4;
  mc.vocab = 3;
  dae::LossConfig cfg;
  while (rep.instances < o.instances) {
    mc.dae_enabled = rng.bernoulli(0.8);
    Student s = Student::init(mc, rng);
    const Branch teacher = Student::init(mc, rng).branch;
    const std::size_t T = 2 + rng.index(4);
    media::Video sv, tv;
    for (std::size_t t = 0; t < T; ++t) {
      sv.frames.emplace_back(mc.frame_size, mc.frame_size, detail::random_vec(rng, 48, 0.0, 1.0));
      tv.frames.emplace_back(mc.frame_size, mc.frame_size, detail::random_vec(rng, 48, 0.0, 1.0));
    }
    ctc::TargetSeq target(1 + rng.index(2));
    for (auto& l : target) l = 1 + rng.index(mc.vocab);
    if (ctc::min_frames(target) > T) continue;
    const ClipSample sample{&sv, &tv, target};
    Student grad = s.zeros_like();
    clip_objective(s, &teacher, sample, cfg, mc.pool, 1.0, &grad);
    auto loss = [&] {
      const auto p = clip_objective(s, &teacher, sample, cfg, mc.pool);
      return dae::total_loss(p.ctc, p.sim, p.rec, cfg);
    };
    auto sig = [&] {
      Signature k;
      clip_objective(s, &teacher, sample, cfg, mc.pool, 1.0, nullptr, &k);
      return k;
    };
    auto params = s.tensors();
    auto grads = grad.tensors();
    for (std::size_t t = 0; t < params.size(); ++t)
      check_coordinates(params[t], grads[t], loss, sig, o.step, rep);
    ++rep.instances;
  }
  return rep;
}

inline std::vector<ComponentReport> run_all(const FdOptions& o) {
  return {check_sim_pos(o), check_sim_neg(o), check_loss_sim(o), check_loss_rec(o),
          check_dae(o),     check_ctc(o),     check_end_to_end(o)};
}

}  // namespace slrobust::gradcheck
