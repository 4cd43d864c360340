#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slrobust/core/affine.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/core/rng.hpp"

// Disentangling auto-encoder: a two-layer encoder whose latent is split into a
// signer half and a background half, cosine similarity losses between the
// student and teacher halves, a signer swap, and an L1 reconstruction through
// a shared two-layer decoder. Gradients are derived by hand for this graph.
namespace slrobust::dae {

using FeatureVec = std::vector<double>;

inline constexpr double kNormEpsilon = 1e-12;

struct LatentPair {
  std::vector<double> signer;
  std::vector<double> background;

  std::size_t half_dim() const noexcept { return signer.size(); }

  static LatentPair split(std::span<const double> h) {
    if (h.size() % 2 != 0) throw ShapeError("latent width must be even to split");
    const std::size_t half = h.size() / 2;
    return {{h.begin(), h.begin() + static_cast<std::ptrdiff_t>(half)},
            {h.begin() + static_cast<std::ptrdiff_t>(half), h.end()}};
  }

  std::vector<double> concat() const {
    std::vector<double> h(signer);
    h.insert(h.end(), background.begin(), background.end());
    return h;
  }

  friend bool operator==(const LatentPair&, const LatentPair&) = default;
};

/// Which composite reconstructs which feature. `keep_background` decodes
/// f^q from (teacher signer, student background) and f^k from (student
/// signer, teacher background); `keep_signer` is the opposite pairing.
enum class SwapOrientation { keep_background, keep_signer };

struct LossConfig {
  double margin = 0.5;
  double alpha = 3.0;
  double momentum = 0.99;
  double external_ve = 0.0;
  double external_va = 0.0;
  SwapOrientation orientation = SwapOrientation::keep_background;

  void validate() const {
    if (!(margin >= -1.0 && margin <= 1.0)) throw ValidationError("margin must lie in [-1, 1]");
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw ValidationError("momentum must lie in [0, 1]");
    if (!(alpha >= 0.0)) throw ValidationError("alpha must be non-negative");
  }
};

/// Two affine layers with an activation between them and none after.
struct TwoLayer {
  Affine first;
  Affine second;

  std::vector<double> forward(std::span<const double> x, Activation act) const {
    auto z = first.forward(x);
    for (double& v : z) v = activate(act, v);
    return second.forward(z);
  }

  std::vector<std::span<double>> tensors() {
    auto t = first.tensors();
    auto s = second.tensors();
    t.insert(t.end(), s.begin(), s.end());
    return t;
  }
  std::vector<std::span<const double>> tensors() const {
    auto t = first.tensors();
    auto s = second.tensors();
    t.insert(t.end(), s.begin(), s.end());
    return t;
  }

  friend bool operator==(const TwoLayer&, const TwoLayer&) = default;
};

struct DaeParams {
  TwoLayer encoder;  // D -> hidden -> D_h
  TwoLayer decoder;  // D_h -> hidden -> D
  Activation activation = Activation::relu;

  std::size_t feature_dim() const noexcept { return encoder.first.in_dim(); }
  std::size_t latent_dim() const noexcept { return encoder.second.out_dim(); }

  /// `latent_dim` defaults to feature_dim / 2, `hidden_dim` to latent_dim.
  static DaeParams init(std::size_t feature_dim, Rng& rng, std::size_t latent_dim = 0,
                        std::size_t hidden_dim = 0) {
    if (latent_dim == 0) latent_dim = feature_dim / 2;
    if (hidden_dim == 0) hidden_dim = latent_dim;
    if (latent_dim == 0 || latent_dim % 2 != 0)
      throw ValidationError("DAE latent width must be even and positive");
    DaeParams p;
    p.encoder.first = Affine::init(feature_dim, hidden_dim, rng);
    p.encoder.second = Affine::init(hidden_dim, latent_dim, rng);
    p.decoder.first = Affine::init(latent_dim, hidden_dim, rng);
    p.decoder.second = Affine::init(hidden_dim, feature_dim, rng);
    return p;
  }

  /// Identity layers throughout with a linear activation; encode is then a
  /// split of the input and decode a concatenation.
  static DaeParams identity(std::size_t dim) {
    DaeParams p;
    p.encoder = {Affine::identity(dim), Affine::identity(dim)};
    p.decoder = {Affine::identity(dim), Affine::identity(dim)};
    p.activation = Activation::identity;
    return p;
  }

  DaeParams zeros_like() const {
    return {{encoder.first.zeros_like(), encoder.second.zeros_like()},
            {decoder.first.zeros_like(), decoder.second.zeros_like()},
            activation};
  }

  std::vector<std::span<double>> tensors() {
    auto t = encoder.tensors();
    auto d = decoder.tensors();
    t.insert(t.end(), d.begin(), d.end());
    return t;
  }
  std::vector<std::span<const double>> tensors() const {
    auto t = encoder.tensors();
    auto d = decoder.tensors();
    t.insert(t.end(), d.begin(), d.end());
    return t;
  }

  friend bool operator==(const DaeParams&, const DaeParams&) = default;
};

inline LatentPair encode(const DaeParams& p, std::span<const double> f) {
  if (f.size() != p.feature_dim())
    throw ShapeError("encode expects a " + std::to_string(p.feature_dim()) +
                     "-dim feature, got " + std::to_string(f.size()));
  return LatentPair::split(p.encoder.forward(f, p.activation));
}

inline FeatureVec decode(const DaeParams& p, const LatentPair& h) {
  if (h.signer.size() != h.background.size() || 2 * h.half_dim() != p.latent_dim())
    throw ShapeError("decode expects two " + std::to_string(p.latent_dim() / 2) +
                     "-dim latent halves");
  return p.decoder.forward(h.concat(), p.activation);
}

// ---------------------------------------------------------------------------
// Similarity losses

struct CosineGrad {
  double value = 0.0;
  std::vector<double> d_x1;
  std::vector<double> d_x2;
};

inline CosineGrad cosine_with_grad(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) throw ShapeError("cosine operands differ in length");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    dot += x1[i] * x2[i];
    n1 += x1[i] * x1[i];
    n2 += x2[i] * x2[i];
  }
  // sqrt(|x1|^2 |x2|^2) rather than |x1| |x2| so that cos(x, x) is exactly 1.
  const double denom = std::sqrt(n1 * n2);
  n1 = std::sqrt(n1);
  n2 = std::sqrt(n2);
  if (!(n1 > kNormEpsilon) || !(n2 > kNormEpsilon))
    throw NumericError("cosine similarity of a near-zero vector");
  CosineGrad out;
  out.value = std::clamp(dot / denom, -1.0, 1.0);
  out.d_x1.resize(x1.size());
  out.d_x2.resize(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) {
    out.d_x1[i] = x2[i] / (n1 * n2) - out.value * x1[i] / (n1 * n1);
    out.d_x2[i] = x1[i] / (n1 * n2) - out.value * x2[i] / (n2 * n2);
  }
  return out;
}

inline double cosine(std::span<const double> x1, std::span<const double> x2) {
  return cosine_with_grad(x1, x2).value;
}

/// 1 - cos(x1, x2)
inline double sim_pos(std::span<const double> x1, std::span<const double> x2) {
  return 1.0 - cosine(x1, x2);
}

/// max(0, cos(x1, x2) - margin)
inline double sim_neg(std::span<const double> x1, std::span<const double> x2, double margin) {
  return std::max(0.0, cosine(x1, x2) - margin);
}

inline CosineGrad sim_pos_grad(std::span<const double> x1, std::span<const double> x2) {
  auto g = cosine_with_grad(x1, x2);
  g.value = 1.0 - g.value;
  for (double& v : g.d_x1) v = -v;
  for (double& v : g.d_x2) v = -v;
  return g;
}

/// Zero gradient on the clamped side (cos <= margin).
inline CosineGrad sim_neg_grad(std::span<const double> x1, std::span<const double> x2,
                               double margin) {
  auto g = cosine_with_grad(x1, x2);
  if (g.value - margin > 0.0) {
    g.value -= margin;
  } else {
    g.value = 0.0;
    std::fill(g.d_x1.begin(), g.d_x1.end(), 0.0);
    std::fill(g.d_x2.begin(), g.d_x2.end(), 0.0);
  }
  return g;
}

inline void require_matching(const LatentPair& a, const LatentPair& b) {
  if (a.signer.size() != b.signer.size() || a.background.size() != b.background.size())
    throw ShapeError("latent pairs differ in half dimensions");
}

inline double loss_sim(const LatentPair& hq, const LatentPair& hk, double margin) {
  require_matching(hq, hk);
  return sim_pos(hq.signer, hk.signer) + sim_neg(hq.background, hk.background, margin);
}

// ---------------------------------------------------------------------------
// Swap and reconstruction

struct Swapped {
  LatentPair qk;  // student signer, teacher background
  LatentPair kq;  // teacher signer, student background
};

/// Exchanges signer halves between branches; background halves stay put.
inline Swapped swap(const LatentPair& hq, const LatentPair& hk) {
  require_matching(hq, hk);
  return {{hq.signer, hk.background}, {hk.signer, hq.background}};
}

/// The composites that reconstruct (f^q, f^k) under a given orientation.
inline std::pair<LatentPair, LatentPair> reconstruction_inputs(const LatentPair& hq,
                                                               const LatentPair& hk,
                                                               SwapOrientation o) {
  auto s = swap(hq, hk);
  if (o == SwapOrientation::keep_background) return {std::move(s.kq), std::move(s.qk)};
  return {std::move(s.qk), std::move(s.kq)};
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("L1 operands differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

/// |f_hat_q - f_q|_1 + |f_hat_k - f_k|_1
inline double loss_rec(std::span<const double> f_hat_q, std::span<const double> f_q,
                       std::span<const double> f_hat_k, std::span<const double> f_k) {
  return l1_distance(f_hat_q, f_q) + l1_distance(f_hat_k, f_k);
}

// Subgradient of |x| with sign(0) = 0.
inline double l1_sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// ---------------------------------------------------------------------------
// Objective composition

/// L_CTC + L_VE + alpha * L_VA + L_sim + L_rec
inline double total_loss(double l_ctc, double l_sim, double l_rec, const LossConfig& cfg) {
  for (double v : {l_ctc, l_sim, l_rec, cfg.external_ve, cfg.external_va, cfg.alpha})
    if (!std::isfinite(v)) throw NumericError("total loss component is not finite");
  return l_ctc + cfg.external_ve + cfg.alpha * cfg.external_va + l_sim + l_rec;
}

/// theta_teacher <- m * theta_teacher + (1 - m) * theta_student
template <ParameterSet P>
void momentum_update(P& teacher, const P& student, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw ValidationError("momentum must lie in [0, 1]");
  auto t = teacher.tensors();
  auto s = student.tensors();
  if (t.size() != s.size()) throw ShapeError("teacher and student differ in tensor count");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k].size() != s[k].size()) throw ShapeError("teacher and student tensor shapes differ");
    for (std::size_t i = 0; i < t[k].size(); ++i) t[k][i] = m * t[k][i] + (1.0 - m) * s[k][i];
  }
}

// ---------------------------------------------------------------------------
// Forward / backward for one frame of the student branch.

namespace detail {

struct TwoLayerCache {
  std::vector<double> input;
  std::vector<double> pre;   // first layer output before the activation
  std::vector<double> post;  // after the activation
  std::vector<double> output;
};

inline TwoLayerCache forward_cached(const TwoLayer& net, std::span<const double> x,
                                    Activation act) {
  TwoLayerCache c;
  c.input.assign(x.begin(), x.end());
  c.pre = net.first.forward(x);
  c.post = c.pre;
  for (double& v : c.post) v = activate(act, v);
  c.output = net.second.forward(c.post);
  return c;
}

inline std::vector<double> backward_cached(const TwoLayer& net, const TwoLayerCache& c,
                                           std::span<const double> d_out, Activation act,
                                           TwoLayer& grad) {
  auto d_post = net.second.backward(c.post, d_out, grad.second);
  for (std::size_t i = 0; i < d_post.size(); ++i) d_post[i] *= activate_grad(act, c.pre[i]);
  return net.first.backward(c.input, d_post, grad.first);
}

inline void push_relu_pattern(std::vector<signed char>& sig, const TwoLayerCache& c) {
  for (double z : c.pre) sig.push_back(z > 0.0 ? 1 : (z < 0.0 ? -1 : 0));
}

}  // namespace detail

/// Teacher-side quantities for one frame. They are constants for the
/// student's gradient.
struct TeacherView {
  FeatureVec f_k;
  LatentPair h_k;
};

inline TeacherView teacher_view(const DaeParams& teacher, FeatureVec f_k) {
  auto h = encode(teacher, f_k);
  return {std::move(f_k), std::move(h)};
}

struct DaeForward {
  detail::TwoLayerCache enc;
  detail::TwoLayerCache dec_q;
  detail::TwoLayerCache dec_k;
  LatentPair h_q;
  CosineGrad pos;
  CosineGrad neg;
  FeatureVec f_q;
  double l_sim = 0.0;
  double l_rec = 0.0;

  const FeatureVec& f_hat_q() const { return dec_q.output; }
  const FeatureVec& f_hat_k() const { return dec_k.output; }

  /// Signs of every quantity the loss is piecewise in: ReLU pre-activations,
  /// L1 residuals and the margin clamp. Finite-difference checks are only
  /// meaningful when this is unchanged across the stencil.
  std::vector<signed char> kink_signature(const TeacherView& tv) const {
    std::vector<signed char> sig;
    detail::push_relu_pattern(sig, enc);
    detail::push_relu_pattern(sig, dec_q);
    detail::push_relu_pattern(sig, dec_k);
    for (std::size_t i = 0; i < f_q.size(); ++i)
      sig.push_back(static_cast<signed char>(l1_sign(dec_q.output[i] - f_q[i])));
    for (std::size_t i = 0; i < tv.f_k.size(); ++i)
      sig.push_back(static_cast<signed char>(l1_sign(dec_k.output[i] - tv.f_k[i])));
    sig.push_back(neg.value > 0.0 ? 1 : 0);
    return sig;
  }
};

inline DaeForward dae_forward(const DaeParams& p, std::span<const double> f_q,
                              const TeacherView& tv, const LossConfig& cfg) {
  DaeForward fw;
  fw.f_q.assign(f_q.begin(), f_q.end());
  if (f_q.size() != p.feature_dim() || tv.f_k.size() != p.feature_dim())
    throw ShapeError("DAE forward expects " + std::to_string(p.feature_dim()) + "-dim features");
  fw.enc = detail::forward_cached(p.encoder, f_q, p.activation);
  fw.h_q = LatentPair::split(fw.enc.output);
  require_matching(fw.h_q, tv.h_k);

  fw.pos = sim_pos_grad(fw.h_q.signer, tv.h_k.signer);
  fw.neg = sim_neg_grad(fw.h_q.background, tv.h_k.background, cfg.margin);
  fw.l_sim = fw.pos.value + fw.neg.value;

  auto [zq, zk] = reconstruction_inputs(fw.h_q, tv.h_k, cfg.orientation);
  fw.dec_q = detail::forward_cached(p.decoder, zq.concat(), p.activation);
  fw.dec_k = detail::forward_cached(p.decoder, zk.concat(), p.activation);
  fw.l_rec = loss_rec(fw.dec_q.output, f_q, fw.dec_k.output, tv.f_k);
  return fw;
}

struct DaeGrads {
  DaeParams params;           // d/d(student DAE parameters)
  std::vector<double> d_f_q;  // d/d(student feature)
};

/// Optional reshaping of the reconstruction gradient. The defaults give the
/// exact gradient of L_rec.
struct RecGradOptions {
  double scale = 1.0;           // multiplies L_rec (1 / D turns the sum into a mean)
  bool detach_target = false;   // treat f^q as a constant target of the dec(h^q) term
};

/// Backpropagates `weight * (L_sim + rec.scale * L_rec)` plus an upstream
/// gradient on the student signer half (e.g. from the classifier). Nothing
/// flows into the teacher view.
inline DaeGrads dae_backward(const DaeParams& p, const DaeForward& fw, const TeacherView& tv,
                             const LossConfig& cfg, double weight = 1.0,
                             std::span<const double> upstream_signer = {},
                             const RecGradOptions& rec = {}) {
  DaeGrads g{p.zeros_like(), {}};
  const std::size_t D = fw.f_q.size();
  const std::size_t half = fw.h_q.half_dim();

  std::vector<double> d_fhat_q(D), d_fhat_k(D);
  g.d_f_q.assign(D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    const double w = weight * rec.scale;
    const double sq = l1_sign(fw.dec_q.output[i] - fw.f_q[i]);
    d_fhat_q[i] = w * sq;
    g.d_f_q[i] = rec.detach_target ? 0.0 : -w * sq;
    d_fhat_k[i] = w * l1_sign(fw.dec_k.output[i] - tv.f_k[i]);
  }
  const auto d_zq = detail::backward_cached(p.decoder, fw.dec_q, d_fhat_q, p.activation, g.params.decoder);
  const auto d_zk = detail::backward_cached(p.decoder, fw.dec_k, d_fhat_k, p.activation, g.params.decoder);

  // Route composite gradients back to the student halves that fed them.
  const bool keep_bg = cfg.orientation == SwapOrientation::keep_background;
  const auto& d_from_signer = keep_bg ? d_zk : d_zq;  // composite holding h_q.signer
  const auto& d_from_bg = keep_bg ? d_zq : d_zk;      // composite holding h_q.background

  std::vector<double> d_h(2 * half);
  for (std::size_t i = 0; i < half; ++i) {
    d_h[i] = weight * fw.pos.d_x1[i] + d_from_signer[i];
    if (!upstream_signer.empty()) d_h[i] += upstream_signer[i];
    d_h[half + i] = weight * fw.neg.d_x1[i] + d_from_bg[half + i];
  }
  const auto d_in = detail::backward_cached(p.encoder, fw.enc, d_h, p.activation, g.params.encoder);
  for (std::size_t i = 0; i < D; ++i) g.d_f_q[i] += d_in[i];

  for (auto t : g.params.tensors())
    if (!all_finite(t)) throw NumericError("DAE gradient is not finite");
  if (!all_finite(g.d_f_q)) throw NumericError("DAE feature gradient is not finite");
  return g;
}

struct DaeInputs {
  FeatureVec f_q;
  TeacherView teacher;
};

struct DaeLossGrads {
  double l_sim = 0.0;
  double l_rec = 0.0;
  DaeGrads grads;
};

/// L_sim + L_rec and its gradient for one frame.
inline DaeLossGrads dae_grads(const DaeParams& p, const DaeInputs& in, const LossConfig& cfg) {
  const auto fw = dae_forward(p, in.f_q, in.teacher, cfg);
  return {fw.l_sim, fw.l_rec, dae_backward(p, fw, in.teacher, cfg)};
}

}  // namespace slrobust::dae
