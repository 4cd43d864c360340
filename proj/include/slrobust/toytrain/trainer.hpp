#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "slrobust/benchgen/benchgen.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/core/rng.hpp"
#include "slrobust/ctc/ctc.hpp"
#include "slrobust/dae/dae.hpp"
#include "slrobust/media/randomize.hpp"
#include "slrobust/media/transform.hpp"
#include "slrobust/metrics/wer.hpp"
#include "slrobust/toytrain/adam.hpp"
#include "slrobust/toytrain/model.hpp"
#include "slrobust/toytrain/objective.hpp"
#include "slrobust/toytrain/synth.hpp"

namespace slrobust::toytrain {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 2;
  std::size_t epochs = 100;
  bool br_enabled = false;
  bool dae_enabled = false;
  std::size_t k_per_class = 10;
  bool spatial_augment = true;
  bool temporal_augment = true;
  bool rec_mean = false;           // average L_rec over feature dimensions instead of summing
  bool detach_rec_target = false;  // no gradient into the backbone through the L_rec target
  dae::LossConfig loss;
  media::AugmentConfig augment;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (batch_size < 1) throw ValidationError("batch size must be at least 1");
    loss.validate();
    augment.validate();
  }
};

inline dae::RecGradOptions rec_options(const TrainConfig& t, const ModelConfig& m) {
  return {t.rec_mean ? 1.0 / static_cast<double>(m.feature_dim) : 1.0, t.detach_rec_target};
}

/// Targets from gloss tokens; unknown tokens are a validation error.
inline ctc::TargetSeq targets_of(const media::Video& v, std::size_t vocab) {
  ctc::TargetSeq out;
  for (const auto& g : v.glosses) {
    const std::size_t l = gloss_label(g, vocab);
    if (l == 0) throw ValidationError("video '" + v.id + "' has unknown gloss '" + g + "'");
    out.push_back(l);
  }
  return out;
}

struct TrainState {
  ModelConfig model;
  TrainConfig config;
  Student student;
  Branch teacher;  // momentum copy of student.branch
  AdamState adam;
  std::size_t step = 0;
  std::vector<media::Frame> scene_pool;  // background-randomization images
  std::size_t skipped_batches = 0;
};

/// Student from the init seed, teacher as an exact copy of its branch, and
/// the K-per-class scene pool.
inline TrainState make_train_state(ModelConfig model, const TrainConfig& cfg,
                                   const benchgen::SceneCatalog& scenes) {
  cfg.validate();
  model.dae_enabled = cfg.dae_enabled;
  TrainState st;
  st.model = model;
  st.config = cfg;
  Rng init_rng(derive_seed(cfg.seed, "init"));
  st.student = Student::init(model, init_rng);
  st.teacher = st.student.branch;
  if (cfg.br_enabled) {
    Rng pool_rng(derive_seed(cfg.seed, "pool"));
    for (const auto& e : benchgen::select_training_pool(scenes, cfg.k_per_class, pool_rng))
      st.scene_pool.push_back(e.load());
  }
  return st;
}

inline std::size_t total_steps(const TrainConfig& cfg, std::size_t n_train) {
  return cfg.epochs * ((n_train + cfg.batch_size - 1) / cfg.batch_size);
}

struct StepStats {
  LossParts parts;  // batch means
  double total = 0.0;
  bool skipped = false;
};

/// The two views of one training clip after augmentation.
struct TrainViews {
  media::Video teacher;  // spatially/temporally augmented original
  media::Video student;  // the same, background-randomized when BR is on
};

inline TrainViews make_views(const TrainState& st, const media::Video& v, Rng& rng) {
  TrainViews out;
  out.teacher = v;
  if (st.config.spatial_augment) out.teacher = media::spatial_augment(out.teacher, rng, st.config.augment);
  if (st.config.temporal_augment) out.teacher = media::temporal_augment(out.teacher, rng, st.config.augment);
  out.student = st.config.br_enabled
                    ? media::background_randomize(out.teacher, st.scene_pool, rng, st.config.augment).video
                    : out.teacher;
  return out;
}

/// One optimizer step over `batch`. A batch containing a clip whose target no
/// longer fits its (augmented) length is skipped and counted.
inline StepStats train_step(TrainState& st, const std::vector<const media::Video*>& batch, Rng& rng,
                            std::size_t n_total_steps) {
  StepStats stats;
  std::vector<TrainViews> views;
  std::vector<ctc::TargetSeq> targets;
  for (const auto* v : batch) {
    views.push_back(make_views(st, *v, rng));
    targets.push_back(targets_of(*v, st.model.vocab));
    if (views.back().student.frames.size() < ctc::min_frames(targets.back())) {
      ++st.skipped_batches;
      stats.skipped = true;
      return stats;
    }
  }

  Student grad = st.student.zeros_like();
  const double w = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ClipSample sample{&views[i].student, &views[i].teacher, targets[i]};
    stats.parts += clip_objective(st.student, &st.teacher, sample, st.config.loss, st.model.pool, w, &grad,
                                   nullptr, rec_options(st.config, st.model))
                       .scaled(w);
  }
  stats.total = batch_loss(stats.parts, st.config.loss);

  AdamConfig ac{st.config.lr, 0.9, 0.999, 1e-8, st.config.weight_decay, n_total_steps};
  adam_step(st.student, grad, st.adam, ++st.step, ac);
  if (st.student.dae_enabled) dae::momentum_update(st.teacher, st.student.branch, st.config.loss.momentum);
  return stats;
}

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<LossParts> epoch_parts;
  std::size_t skipped_batches = 0;
};

inline TrainLog train(TrainState& st, const std::vector<media::Video>& videos) {
  TrainLog log;
  Rng rng(derive_seed(st.config.seed, "augment"));
  Rng order_rng(derive_seed(st.config.seed, "order"));
  const std::size_t steps = total_steps(st.config, videos.size());
  std::vector<std::size_t> order(videos.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < st.config.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), order_rng.engine());
    double sum = 0.0;
    LossParts parts;
    std::size_t n = 0;
    for (std::size_t b = 0; b < order.size(); b += st.config.batch_size) {
      std::vector<const media::Video*> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + st.config.batch_size); ++i)
        batch.push_back(&videos[order[i]]);
      const auto s = train_step(st, batch, rng, steps);
      if (!s.skipped) {
        sum += s.total;
        parts += s.parts;
        ++n;
      }
    }
    log.epoch_loss.push_back(n ? sum / static_cast<double>(n) : 0.0);
    log.epoch_parts.push_back(n ? parts.scaled(1.0 / static_cast<double>(n)) : LossParts{});
  }
  log.skipped_batches = st.skipped_batches;
  return log;
}

struct EvalResult {
  metrics::WerBreakdown wer;
  std::vector<metrics::GlossSeq> hypotheses;
};

inline metrics::GlossSeq decode_glosses(const Matrix& logits) {
  metrics::GlossSeq out;
  for (std::size_t l : ctc::greedy_decode(logits)) out.push_back(gloss_name(l));
  return out;
}

/// Greedy-decodes every clip with the student alone and pools WER.
inline EvalResult evaluate(const Student& s, const std::vector<media::Video>& videos, std::size_t pool) {
  EvalResult out;
  std::vector<std::pair<metrics::GlossSeq, metrics::GlossSeq>> pairs;
  for (const auto& v : videos) {
    out.hypotheses.push_back(decode_glosses(infer_logits(s, v, pool)));
    pairs.emplace_back(v.glosses, out.hypotheses.back());
  }
  out.wer = metrics::corpus_wer(pairs);
  return out;
}

}  // namespace slrobust::toytrain
