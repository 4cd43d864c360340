#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "slrobust/toytrain/experiment.hpp"
#include "slrobust/toytrain/gradcheck.hpp"
#include "support.hpp"

using namespace slrobust;
using namespace slrobust::toytrain;

namespace {

ExperimentConfig tiny_experiment(std::uint64_t seed = 3) {
  ExperimentConfig c = default_experiment(seed);
  c.synth.frame_size = 16;
  c.synth.n_train = 4;
  c.synth.n_test = 3;
  c.synth.textures_per_class = 2;
  c.train.augment.resize_size = 18;
  c.train.augment.crop_size = 16;
  c.train.epochs = 2;
  c.train.k_per_class = 2;
  c.model.hidden = 8;
  c.model.feature_dim = 8;
  c.model.latent_dim = 8;
  c.model.dae_hidden = 6;
  return c;
}

ModelConfig micro_model(bool dae) {
  ModelConfig m;
  m.frame_size = 8;
  m.pool = 2;
  m.hidden = 6;
  m.feature_dim = 8;
  m.latent_dim = 4;
  m.vocab = 3;
  m.dae_enabled = dae;
  return m;
}

media::Video random_clip(Rng& rng, std::size_t frames, std::size_t size) {
  media::Video v{"clip", {}, {"G1", "G2"}};
  for (std::size_t i = 0; i < frames; ++i) v.frames.push_back(testsupport::random_frame(rng, size, size));
  return v;
}

}  // namespace

TEST(Adam, CosineScheduleEndpoints) {
  EXPECT_EQ(cosine_lr(0.1, 0, 100), 0.1);
  EXPECT_NEAR(cosine_lr(0.1, 50, 100), 0.05, 1e-15);
  EXPECT_NEAR(cosine_lr(0.1, 100, 100), 0.0, 1e-15);
  EXPECT_NEAR(cosine_lr(0.1, 150, 100), 0.0, 1e-15);
}

TEST(Adam, FirstStepMovesBySignedLearningRate) {
  // After bias correction m_hat = g and v_hat = g^2 at t = 1, so each
  // coordinate moves by lr_1 * g / (|g| + eps).
  dae::DaeParams p = dae::DaeParams::identity(2), g = p.zeros_like();
  Rng rng(1);
  for (auto t : g.tensors())
    for (double& v : t) v = rng.uniform(-2, 2);
  const dae::DaeParams before = p;
  AdamConfig cfg{0.01, 0.9, 0.999, 1e-8, 0.1, 10};
  AdamState st;
  adam_step(p, g, st, 1, cfg);
  const double lr1 = cosine_lr(0.01, 1, 10);
  const auto ps = p.tensors();
  const auto gs = g.tensors();
  const auto bs = before.tensors();
  for (std::size_t k = 0; k < ps.size(); ++k)
    for (std::size_t i = 0; i < ps[k].size(); ++i) {
      const double gi = gs[k][i] + 0.1 * bs[k][i];
      EXPECT_NEAR(ps[k][i], bs[k][i] - lr1 * gi / (std::abs(gi) + 1e-8), 1e-15);
    }
  EXPECT_THROW(adam_step(p, g, st, 0, cfg), ValidationError);
}

TEST(Model, InferenceUsesOnlyStudentEncoder) {
  Rng rng(2);
  Student s = Student::init(micro_model(true), rng);
  const auto clip = random_clip(rng, 3, 8);
  const Matrix base = infer_logits(s, clip, 2);
  // The decoder plays no part at inference.
  for (auto t : s.branch.dae.decoder.tensors())
    for (double& v : t) v = rng.uniform(-5, 5);
  EXPECT_EQ(infer_logits(s, clip, 2), base);
}

TEST(Model, ComponentInitIsIndependentOfOtherShapes) {
  ModelConfig a = micro_model(true), b = micro_model(true);
  b.dae_hidden = 11;
  b.latent_dim = 8;
  Rng ra(5), rb(5);
  const Student sa = Student::init(a, ra), sb = Student::init(b, rb);
  EXPECT_EQ(sa.branch.backbone, sb.branch.backbone);
}

TEST(Objective, DisabledDaeIsPlainCtc) {
  Rng rng(3);
  const Student s = Student::init(micro_model(false), rng);
  const auto clip = random_clip(rng, 4, 8);
  const ClipSample sample{&clip, nullptr, {1, 2}};
  const auto parts = clip_objective(s, nullptr, sample, dae::LossConfig{}, 2);
  EXPECT_EQ(parts.sim, 0.0);
  EXPECT_EQ(parts.rec, 0.0);
  EXPECT_EQ(parts.ctc, ctc::ctc_loss(infer_logits(s, clip, 2), {1, 2}));
}

TEST(Objective, DaeNeedsTeacherView) {
  Rng rng(4);
  const Student s = Student::init(micro_model(true), rng);
  const auto clip = random_clip(rng, 4, 8);
  EXPECT_THROW(clip_objective(s, nullptr, {&clip, &clip, {1}}, dae::LossConfig{}, 2), ValidationError);
  const auto shorter = random_clip(rng, 3, 8);
  EXPECT_THROW(clip_objective(s, &s.branch, {&clip, &shorter, {1}}, dae::LossConfig{}, 2), ShapeError);
}

TEST(Objective, RecScaleScalesReportedTerm) {
  Rng rng(6);
  const Student s = Student::init(micro_model(true), rng);
  const Branch teacher = Student::init(micro_model(true), rng).branch;
  const auto clip = random_clip(rng, 3, 8);
  const ClipSample sample{&clip, &clip, {1}};
  const auto full = clip_objective(s, &teacher, sample, dae::LossConfig{}, 2);
  const auto scaled = clip_objective(s, &teacher, sample, dae::LossConfig{}, 2, 1.0, nullptr, nullptr, {0.125, true});
  EXPECT_NEAR(scaled.rec, 0.125 * full.rec, 1e-12);
  EXPECT_EQ(scaled.sim, full.sim);
  EXPECT_EQ(scaled.ctc, full.ctc);
}

TEST(Trainer, TeacherStartsAsCopyAndTracksStudent) {
  const ExperimentConfig c = tiny_experiment();
  const auto data = gen_synthetic_dataset(c.synth);
  ModelConfig m = c.model;
  m.frame_size = 16;
  m.vocab = c.synth.vocab;
  TrainConfig tc = condition_config(c.train, Condition::br_dae);
  TrainState st = make_train_state(m, tc, data.train_scenes);
  EXPECT_EQ(st.teacher, st.student.branch);
  EXPECT_EQ(st.scene_pool.size(), texture_classes().size() * 2);

  const Branch teacher0 = st.teacher;
  Rng rng(1);
  const auto stats = train_step(st, {&data.train[0], &data.train[1]}, rng, 10);
  ASSERT_FALSE(stats.skipped);
  Branch expected = teacher0;
  dae::momentum_update(expected, st.student.branch, tc.loss.momentum);
  EXPECT_EQ(st.teacher, expected);
  EXPECT_NE(st.student.branch, teacher0);
}

TEST(Trainer, BaselineLeavesTeacherAndDaeUntouched) {
  const ExperimentConfig c = tiny_experiment();
  const auto data = gen_synthetic_dataset(c.synth);
  ModelConfig m = c.model;
  m.frame_size = 16;
  m.vocab = c.synth.vocab;
  TrainState st = make_train_state(m, condition_config(c.train, Condition::baseline), data.train_scenes);
  EXPECT_TRUE(st.scene_pool.empty());
  const Branch teacher0 = st.teacher;
  const dae::DaeParams dae0 = st.student.branch.dae;
  train(st, data.train);
  EXPECT_EQ(st.teacher, teacher0);
  EXPECT_EQ(st.student.branch.dae, dae0);
  EXPECT_NE(st.student.branch.backbone, teacher0.backbone);
}

TEST(Trainer, BrWithZeroLambdaReproducesBaseline) {
  // With lambda fixed at 0 the randomized view is the original view. With
  // spatial and temporal augmentation off, BR's own draws are the only users
  // of the augmentation stream, so the two trainings coincide.
  ExperimentConfig c = tiny_experiment();
  c.train.augment.lambda_min = c.train.augment.lambda_max = 0.0;
  c.train.spatial_augment = c.train.temporal_augment = false;
  c.conditions = {Condition::baseline, Condition::br};
  const auto rep = run_experiment(c);
  EXPECT_EQ(rep.rows[0].student, rep.rows[1].student);
  EXPECT_EQ(rep.rows[0].shifted.wer, rep.rows[1].shifted.wer);
}

TEST(Experiment, DeterministicReports) {
  ExperimentConfig c = tiny_experiment(9);
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  EXPECT_EQ(report_json(a).dump(), report_json(b).dump());
  ASSERT_EQ(a.rows.size(), 3u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].student, b.rows[i].student);
  EXPECT_FALSE(report_json(a).contains("seconds"));
  EXPECT_TRUE(report_json(a, true).contains("seconds"));
}

TEST(Synth, SplitsAreDisjointAndShiftedTwinsShareSigners) {
  SynthConfig cfg = tiny_experiment().synth;
  const auto ds = gen_synthetic_dataset(cfg);
  std::set<std::string> train_ids;
  for (const auto& v : ds.train) train_ids.insert(v.id);
  for (const auto& v : ds.test_clean) EXPECT_EQ(train_ids.count(v.id), 0u);

  std::set<std::vector<double>> train_textures;
  for (const auto& [_, entries] : ds.train_scenes.classes)
    for (const auto& e : entries) train_textures.insert(e.load().data());
  for (const auto& [_, entries] : ds.test_scenes.classes)
    for (const auto& e : entries) EXPECT_EQ(train_textures.count(e.load().data()), 0u);

  ASSERT_EQ(ds.test_clean.size(), ds.test_shifted.size());
  for (std::size_t i = 0; i < ds.test_clips.size(); ++i) {
    const auto& clip = ds.test_clips[i];
    EXPECT_EQ(ds.test_clean[i].glosses, ds.test_shifted[i].glosses);
    for (std::size_t t = 0; t < clip.sprites.size(); ++t) {
      const auto& mask = clip.sprites[t].mask;
      for (std::size_t y = 0; y < mask.height(); ++y)
        for (std::size_t x = 0; x < mask.width(); ++x)
          if (mask.at(y, x) == 1.0) {
            EXPECT_EQ(ds.test_clean[i].frames[t].at(y, x, 0), ds.test_shifted[i].frames[t].at(y, x, 0));
          }
    }
  }
}

TEST(Synth, LabelsAndGlossesRoundTrip) {
  EXPECT_EQ(gloss_label(gloss_name(3), 5), 3u);
  EXPECT_EQ(gloss_label("G9", 5), 0u);
  EXPECT_EQ(gloss_label("x", 5), 0u);
  media::Video v{"v", {}, {"G1", "Q"}};
  EXPECT_THROW(targets_of(v, 5), ValidationError);
}

TEST(Config, JsonRoundTripAndPartialOverrides) {
  const ExperimentConfig d = default_experiment(4);
  const auto back = json(d).get<ExperimentConfig>();
  EXPECT_EQ(json(back).dump(), json(d).dump());
  EXPECT_EQ(back.train.loss.momentum, d.train.loss.momentum);
  EXPECT_EQ(back.model.dae_hidden, d.model.dae_hidden);

  const auto partial = json::parse(R"({"train": {"epochs": 3, "loss": {"margin": 0.25}},
                                       "model": {"hidden": 16}, "conditions": ["br"]})")
                           .get<ExperimentConfig>();
  EXPECT_EQ(partial.train.epochs, 3u);
  EXPECT_EQ(partial.train.loss.margin, 0.25);
  EXPECT_EQ(partial.train.loss.momentum, d.train.loss.momentum);
  EXPECT_EQ(partial.model.hidden, 16u);
  EXPECT_EQ(partial.model.latent_dim, d.model.latent_dim);
  EXPECT_EQ(partial.synth.hand_size, d.synth.hand_size);
  ASSERT_EQ(partial.conditions.size(), 1u);
  EXPECT_EQ(partial.conditions[0], Condition::br);
  EXPECT_THROW(json::parse(R"({"conditions": ["nope"]})").get<ExperimentConfig>(), ValidationError);
  EXPECT_THROW(json::parse(R"({"train": {"lr": 0}})").get<ExperimentConfig>(), ValidationError);
}

TEST(GradCheck, AllComponentsWithinTolerance) {
  gradcheck::FdOptions o;
  o.instances = 10;
  o.seed = 5;
  for (const auto& r : gradcheck::run_all(o)) {
    const double tol = r.name == "end_to_end" ? 1e-3 : 1e-4;
    EXPECT_LE(r.max_rel_error, tol) << r.name;
    EXPECT_GT(r.checked, 0u) << r.name;
  }
}

TEST(Config, ShippedDemoConfigMatchesDefaults) {
  std::ifstream in(std::string(SLROBUST_CONFIG_DIR) + "/demo.json");
  ASSERT_TRUE(in.good());
  const auto shipped = json::parse(in).get<ExperimentConfig>();
  EXPECT_EQ(json(shipped).dump(), json(default_experiment()).dump());
}
