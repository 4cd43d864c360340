#pragma once

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "slrobust/core/error.hpp"
#include "slrobust/dae/checkpoint.hpp"
#include "slrobust/toytrain/synth.hpp"
#include "slrobust/toytrain/trainer.hpp"

namespace slrobust::media {

using nlohmann::json;

inline void to_json(json& j, const AugmentConfig& c) {
  j = {{"lambda_min", c.lambda_min},         {"lambda_max", c.lambda_max},
       {"jitter_strength", c.jitter_strength}, {"rotation_max_deg", c.rotation_max_deg},
       {"crop_size", c.crop_size},           {"resize_size", c.resize_size},
       {"hflip_prob", c.hflip_prob},         {"dup_frac_max", c.dup_frac_max},
       {"del_frac_max", c.del_frac_max}};
}

inline void from_json(const json& j, AugmentConfig& c) {
  const AugmentConfig d;
  c.lambda_min = j.value("lambda_min", d.lambda_min);
  c.lambda_max = j.value("lambda_max", d.lambda_max);
  c.jitter_strength = j.value("jitter_strength", d.jitter_strength);
  c.rotation_max_deg = j.value("rotation_max_deg", d.rotation_max_deg);
  c.crop_size = j.value("crop_size", d.crop_size);
  c.resize_size = j.value("resize_size", d.resize_size);
  c.hflip_prob = j.value("hflip_prob", d.hflip_prob);
  c.dup_frac_max = j.value("dup_frac_max", d.dup_frac_max);
  c.del_frac_max = j.value("del_frac_max", d.del_frac_max);
}

}  // namespace slrobust::media

namespace slrobust::toytrain {

using nlohmann::json;

enum class Condition { baseline, br, br_dae };

NLOHMANN_JSON_SERIALIZE_ENUM(Condition, {
                                            {Condition::baseline, "baseline"},
                                            {Condition::br, "br"},
                                            {Condition::br_dae, "br_dae"},
                                        })

inline std::string condition_name(Condition c) { return json(c).get<std::string>(); }

inline Condition parse_condition(const std::string& s) {
  if (s == "baseline") return Condition::baseline;
  if (s == "br") return Condition::br;
  if (s == "br_dae") return Condition::br_dae;
  throw ValidationError("unknown condition '" + s + "' (expected baseline, br or br_dae)");
}

struct ExperimentConfig {
  SynthConfig synth;
  ModelConfig model;
  TrainConfig train;
  std::vector<Condition> conditions{Condition::baseline, Condition::br, Condition::br_dae};
};

/// Desk-scale defaults: 32x32 frames, 60 training and 60 test clips, and augmentation
/// sizes scaled from 256/224 down to the frame size.
inline ExperimentConfig default_experiment(std::uint64_t seed = 7) {
  ExperimentConfig c;
  c.synth.seed = seed;
  c.train.seed = seed;
  c.train.lr = 3e-3;
  c.train.epochs = 60;
  c.train.rec_mean = true;
  c.train.detach_rec_target = true;
  c.train.loss.momentum = 0.999;
  c.train.augment.resize_size = 36;
  c.train.augment.crop_size = 32;
  c.synth.hand_size = 6.0;
  c.synth.n_test = 60;
  c.model.frame_size = 32;
  c.model.latent_dim = 32;
  c.model.dae_hidden = 64;
  return c;
}

inline TrainConfig condition_config(const TrainConfig& base, Condition c) {
  TrainConfig t = base;
  t.br_enabled = c != Condition::baseline;
  t.dae_enabled = c == Condition::br_dae;
  return t;
}

struct ConditionResult {
  Condition condition = Condition::baseline;
  metrics::WerBreakdown clean;
  metrics::WerBreakdown shifted;
  double final_loss = 0.0;
  std::size_t skipped_batches = 0;
  double seconds = 0.0;
  Student student;

  double gap() const { return shifted.wer - clean.wer; }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ConditionResult> rows;
  double seconds = 0.0;

  const ConditionResult& row(Condition c) const {
    for (const auto& r : rows)
      if (r.condition == c) return r;
    throw ValidationError("report has no row for condition '" + condition_name(c) + "'");
  }
};

// --- JSON ------------------------------------------------------------------

inline json breakdown_json(const metrics::WerBreakdown& b) {
  return {{"wer", b.wer},           {"substitutions", b.substitutions},
          {"deletions", b.deletions}, {"insertions", b.insertions},
          {"matches", b.matches},   {"ref_words", b.ref_len}};
}

inline void to_json(json& j, const SynthConfig& c) {
  j = {{"n_train", c.n_train},
       {"n_test", c.n_test},
       {"frame_size", c.frame_size},
       {"vocab", c.vocab},
       {"min_len", c.min_len},
       {"max_len", c.max_len},
       {"clean_background", c.clean_background},
       {"background_jitter", c.background_jitter},
       {"textures_per_class", c.textures_per_class},
       {"hand_size", c.hand_size},
       {"seed", c.seed}};
}

inline void from_json(const json& j, SynthConfig& c) {
  const SynthConfig d;
  c.n_train = j.value("n_train", d.n_train);
  c.n_test = j.value("n_test", d.n_test);
  c.frame_size = j.value("frame_size", d.frame_size);
  c.vocab = j.value("vocab", d.vocab);
  c.min_len = j.value("min_len", d.min_len);
  c.max_len = j.value("max_len", d.max_len);
  c.clean_background = j.value("clean_background", d.clean_background);
  c.background_jitter = j.value("background_jitter", d.background_jitter);
  c.textures_per_class = j.value("textures_per_class", d.textures_per_class);
  c.hand_size = j.value("hand_size", d.hand_size);
  c.seed = j.value("seed", d.seed);
}

inline void to_json(json& j, const ModelConfig& c) {
  j = {{"pool", c.pool}, {"hidden", c.hidden}, {"feature_dim", c.feature_dim}, {"latent_dim", c.latent()},
       {"dae_hidden", c.dae_hidden == 0 ? c.latent() : c.dae_hidden}};
}

inline void from_json(const json& j, ModelConfig& c) {
  const ModelConfig d;
  c.pool = j.value("pool", d.pool);
  c.hidden = j.value("hidden", d.hidden);
  c.feature_dim = j.value("feature_dim", d.feature_dim);
  c.latent_dim = j.value("latent_dim", d.latent_dim);
  c.dae_hidden = j.value("dae_hidden", d.dae_hidden);
}

inline void to_json(json& j, const TrainConfig& c) {
  j = {{"lr", c.lr},
       {"weight_decay", c.weight_decay},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"k_per_class", c.k_per_class},
       {"spatial_augment", c.spatial_augment},
       {"temporal_augment", c.temporal_augment},
       {"rec_mean", c.rec_mean},
       {"detach_rec_target", c.detach_rec_target},
       {"loss", c.loss},
       {"augment", c.augment},
       {"seed", c.seed}};
}

inline void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.k_per_class = j.value("k_per_class", d.k_per_class);
  c.spatial_augment = j.value("spatial_augment", d.spatial_augment);
  c.temporal_augment = j.value("temporal_augment", d.temporal_augment);
  c.rec_mean = j.value("rec_mean", d.rec_mean);
  c.detach_rec_target = j.value("detach_rec_target", d.detach_rec_target);
  c.loss = j.contains("loss") ? j.at("loss").get<dae::LossConfig>() : d.loss;
  c.augment = j.contains("augment") ? j.at("augment").get<media::AugmentConfig>() : d.augment;
  c.seed = j.value("seed", d.seed);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = {{"synth", c.synth}, {"model", c.model}, {"train", c.train}, {"conditions", c.conditions}};
}

/// Missing keys fall back to default_experiment(); the model frame size always
/// follows the crop size.
inline void from_json(const json& j, ExperimentConfig& c) {
  c = default_experiment();
  auto overlay = [&j](const char* key, auto& section) {
    if (!j.contains(key)) return;
    json merged = json(section);
    merged.merge_patch(j.at(key));
    section = merged.get<std::decay_t<decltype(section)>>();
  };
  overlay("synth", c.synth);
  overlay("model", c.model);
  overlay("train", c.train);
  if (j.contains("conditions")) {
    c.conditions.clear();
    for (const auto& s : j.at("conditions")) c.conditions.push_back(parse_condition(s.get<std::string>()));
  }
  c.model.frame_size = c.train.augment.crop_size;
  c.model.vocab = c.synth.vocab;
  c.synth.validate();
  c.train.validate();
}

/// Deterministic content only; wall-clock timings are added separately.
inline json report_json(const ExperimentReport& r, bool include_timing = false) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json jr{{"condition", row.condition},
            {"wer_clean", row.clean.wer},
            {"wer_shifted", row.shifted.wer},
            {"gap", row.gap()},
            {"clean", breakdown_json(row.clean)},
            {"shifted", breakdown_json(row.shifted)},
            {"final_loss", row.final_loss},
            {"skipped_batches", row.skipped_batches}};
    if (include_timing) jr["seconds"] = row.seconds;
    rows.push_back(std::move(jr));
  }
  json j{{"config", r.config}, {"rows", rows}};
  if (include_timing) j["seconds"] = r.seconds;
  return j;
}

inline std::string report_table(const ExperimentReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "condition" << std::right << std::setw(11) << "WER clean"
     << std::setw(13) << "WER shifted" << std::setw(9) << "gap" << '\n';
  os << std::string(43, '-') << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& row : r.rows)
    os << std::left << std::setw(10) << condition_name(row.condition) << std::right << std::setw(11)
       << row.clean.wer << std::setw(13) << row.shifted.wer << std::setw(9) << row.gap() << '\n';
  return os.str();
}

// --- Running ---------------------------------------------------------------

inline ConditionResult run_condition(const ExperimentConfig& cfg, const SyntheticDataset& data,
                                     Condition c) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const TrainConfig tc = condition_config(cfg.train, c);
  TrainState st = make_train_state(cfg.model, tc, data.train_scenes);
  const auto log = train(st, data.train);
  ConditionResult res;
  res.condition = c;
  res.clean = evaluate(st.student, data.test_clean, st.model.pool).wer;
  res.shifted = evaluate(st.student, data.test_shifted, st.model.pool).wer;
  res.final_loss = log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back();
  res.skipped_batches = log.skipped_batches;
  res.student = std::move(st.student);
  res.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return res;
}

/// Trains each condition from the same seeds and scores it on the clean and
/// background-shifted test sets.
inline ExperimentReport run_experiment(ExperimentConfig cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  cfg.model.frame_size = cfg.train.augment.crop_size;
  cfg.model.vocab = cfg.synth.vocab;
  if (cfg.synth.frame_size != cfg.model.frame_size)
    throw ValidationError("crop size must equal the synthetic frame size");
  if (cfg.conditions.empty()) throw ValidationError("experiment needs at least one condition");
  const auto data = gen_synthetic_dataset(cfg.synth);
  ExperimentReport rep;
  rep.config = cfg;
  for (Condition c : cfg.conditions) rep.rows.push_back(run_condition(cfg, data, c));
  rep.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return rep;
}

}  // namespace slrobust::toytrain
