#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slrobust/core/affine.hpp"
#include "slrobust/core/matrix.hpp"
#include "slrobust/core/rng.hpp"
#include "slrobust/ctc/ctc.hpp"
#include "slrobust/dae/dae.hpp"
#include "slrobust/media/image.hpp"

// Desk-scale recognizer: per-frame average pooling and an MLP feature
// extractor, an optional DAE encoder whose signer half feeds a framewise
// linear classifier, trained with CTC.
namespace slrobust::toytrain {

struct ModelConfig {
  std::size_t frame_size = 32;
  std::size_t pool = 2;         // average-pooling factor before flattening
  std::size_t hidden = 64;      // backbone hidden width
  std::size_t feature_dim = 32;  // D
  std::size_t latent_dim = 0;   // D_h; 0 selects D / 2
  std::size_t dae_hidden = 0;   // DAE hidden width; 0 selects D_h
  std::size_t vocab = 5;        // glosses, excluding blank
  bool dae_enabled = true;

  std::size_t input_dim() const {
    const std::size_t s = (frame_size + pool - 1) / pool;
    return s * s * 3;
  }
  std::size_t latent() const { return latent_dim == 0 ? feature_dim / 2 : latent_dim; }
  std::size_t classes() const { return vocab + 1; }
  std::size_t classifier_in() const { return dae_enabled ? latent() / 2 : feature_dim; }
};

/// Average-pools a frame by `pool` and flattens it, centred around zero.
inline std::vector<double> frame_input(const media::Frame& f, std::size_t pool) {
  const std::size_t oh = (f.height() + pool - 1) / pool;
  const std::size_t ow = (f.width() + pool - 1) / pool;
  std::vector<double> out(oh * ow * 3, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      std::size_t count = 0;
      double acc[3] = {0, 0, 0};
      for (std::size_t dy = 0; dy < pool && y * pool + dy < f.height(); ++dy)
        for (std::size_t dx = 0; dx < pool && x * pool + dx < f.width(); ++dx) {
          ++count;
          for (std::size_t c = 0; c < 3; ++c) acc[c] += f.at(y * pool + dy, x * pool + dx, c);
        }
      for (std::size_t c = 0; c < 3; ++c)
        out[(y * ow + x) * 3 + c] = acc[c] / static_cast<double>(count) - 0.5;
    }
  return out;
}

struct Backbone {
  Affine first;
  Affine second;

  static Backbone init(const ModelConfig& cfg, Rng& rng) {
    return {Affine::init(cfg.input_dim(), cfg.hidden, rng),
            Affine::init(cfg.hidden, cfg.feature_dim, rng)};
  }

  Backbone zeros_like() const { return {first.zeros_like(), second.zeros_like()}; }

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

  friend bool operator==(const Backbone&, const Backbone&) = default;
};

/// Feature extractor plus DAE: the part of the network shared in shape by the
/// student and the momentum teacher.
struct Branch {
  Backbone backbone;
  dae::DaeParams dae;

  Branch zeros_like() const { return {backbone.zeros_like(), dae.zeros_like()}; }

  std::vector<std::span<double>> tensors() {
    auto t = backbone.tensors();
    auto d = dae.tensors();
    t.insert(t.end(), d.begin(), d.end());
    return t;
  }
  std::vector<std::span<const double>> tensors() const {
    auto t = backbone.tensors();
    auto d = dae.tensors();
    t.insert(t.end(), d.begin(), d.end());
    return t;
  }

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Student {
  Branch branch;
  Affine classifier;
  bool dae_enabled = true;

  static Student init(const ModelConfig& cfg, Rng& rng) {
    Student s;
    s.dae_enabled = cfg.dae_enabled;
    // Separate streams keep each component's draw independent of the others' shapes.
    const std::uint64_t base = rng.engine()();
    Rng backbone_rng(derive_seed(base, "backbone"));
    Rng dae_rng(derive_seed(base, "dae"));
    Rng classifier_rng(derive_seed(base, "classifier"));
    s.branch.backbone = Backbone::init(cfg, backbone_rng);
    s.branch.dae = dae::DaeParams::init(cfg.feature_dim, dae_rng, cfg.latent(), cfg.dae_hidden);
    s.classifier = Affine::init(cfg.classifier_in(), cfg.classes(), classifier_rng);
    return s;
  }

  Student zeros_like() const { return {branch.zeros_like(), classifier.zeros_like(), dae_enabled}; }

  /// Trainable tensors. The DAE is excluded when disabled, since it then
  /// receives no gradient.
  std::vector<std::span<double>> tensors() {
    auto t = branch.backbone.tensors();
    if (dae_enabled) {
      auto d = branch.dae.tensors();
      t.insert(t.end(), d.begin(), d.end());
    }
    auto c = classifier.tensors();
    t.insert(t.end(), c.begin(), c.end());
    return t;
  }
  std::vector<std::span<const double>> tensors() const {
    auto t = branch.backbone.tensors();
    if (dae_enabled) {
      auto d = branch.dae.tensors();
      t.insert(t.end(), d.begin(), d.end());
    }
    auto c = classifier.tensors();
    t.insert(t.end(), c.begin(), c.end());
    return t;
  }

  friend bool operator==(const Student&, const Student&) = default;
};

struct BackboneCache {
  std::vector<double> input;
  std::vector<double> pre;
  std::vector<double> post;
  std::vector<double> feature;
};

inline BackboneCache backbone_forward(const Backbone& b, std::vector<double> input) {
  BackboneCache c;
  c.input = std::move(input);
  c.pre = b.first.forward(c.input);
  c.post = c.pre;
  for (double& v : c.post) v = activate(Activation::relu, v);
  c.feature = b.second.forward(c.post);
  return c;
}

inline void backbone_backward(const Backbone& b, const BackboneCache& c,
                              std::span<const double> d_feature, Backbone& grad) {
  auto d_post = b.second.backward(c.post, d_feature, grad.second);
  for (std::size_t i = 0; i < d_post.size(); ++i)
    d_post[i] *= activate_grad(Activation::relu, c.pre[i]);
  b.first.backward(c.input, d_post, grad.first);
}

/// Per-frame features of a clip under a branch (teacher or student).
inline std::vector<BackboneCache> extract_features(const Backbone& b, const media::Video& v,
                                                   std::size_t pool) {
  std::vector<BackboneCache> out;
  out.reserve(v.frames.size());
  for (const auto& f : v.frames) out.push_back(backbone_forward(b, frame_input(f, pool)));
  return out;
}

/// The inference path: backbone, then (if enabled) the DAE encoder's signer
/// half, then the classifier. Only the student is involved.
inline Matrix infer_logits(const Student& s, const media::Video& v, std::size_t pool) {
  Matrix logits(v.frames.size(), s.classifier.out_dim());
  for (std::size_t t = 0; t < v.frames.size(); ++t) {
    const auto c = backbone_forward(s.branch.backbone, frame_input(v.frames[t], pool));
    std::vector<double> z = s.dae_enabled ? dae::encode(s.branch.dae, c.feature).signer : c.feature;
    const auto row = s.classifier.forward(z);
    std::copy(row.begin(), row.end(), logits.row(t).begin());
  }
  return logits;
}

}  // namespace slrobust::toytrain
