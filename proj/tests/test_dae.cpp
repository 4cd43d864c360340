#include <gtest/gtest.h>

#include <cmath>

#include "slrobust/dae/checkpoint.hpp"
#include "slrobust/dae/dae.hpp"
#include "support.hpp"

using namespace slrobust;
using namespace slrobust::dae;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

LatentPair random_pair(Rng& rng, std::size_t half) {
  return {random_vec(rng, half), random_vec(rng, half)};
}

struct ScalarParams {
  std::vector<double> values;
  std::vector<std::span<double>> tensors() { return {std::span<double>(values)}; }
  std::vector<std::span<const double>> tensors() const { return {std::span<const double>(values)}; }
};

}  // namespace

TEST(Cosine, SimilarityIdentities) {
  const std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> y{2.0, 1.0, 0.0};  // orthogonal to x
  EXPECT_EQ(sim_pos(x, x), 0.0);
  EXPECT_EQ(sim_neg(x, x, 0.5), 0.5);
  EXPECT_NEAR(sim_pos(x, y), 1.0, 1e-15);
  EXPECT_EQ(sim_neg(x, y, 0.5), 0.0);
  const std::vector<double> neg{-1.0, 2.0, -0.5};
  EXPECT_EQ(sim_neg(x, neg, 0.0), 0.0);
}

TEST(Cosine, ScaleInvariance) {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const auto x = random_vec(rng, 6);
    const double c = rng.uniform(0.01, 100.0);
    std::vector<double> cx(x);
    for (double& v : cx) v *= c;
    EXPECT_NEAR(sim_pos(x, cx), 0.0, 1e-14);
    EXPECT_NEAR(sim_neg(x, cx, 0.3), 0.7, 1e-14);
  }
}

TEST(Cosine, RangesAndSymmetry) {
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_vec(rng, 5), b = random_vec(rng, 5);
    const double delta = rng.uniform(-1.0, 1.0);
    EXPECT_GE(sim_pos(a, b), 0.0);
    EXPECT_LE(sim_pos(a, b), 2.0);
    EXPECT_GE(sim_neg(a, b, delta), 0.0);
    EXPECT_LE(sim_neg(a, b, delta), 1.0 - delta + 1e-15);
    const auto ha = random_pair(rng, 3), hb = random_pair(rng, 3);
    EXPECT_DOUBLE_EQ(loss_sim(ha, hb, delta), loss_sim(hb, ha, delta));
  }
}

TEST(Cosine, NearZeroNormIsAnError) {
  const std::vector<double> z{0.0, 0.0}, tiny{1e-14, 0.0}, x{1.0, 0.0};
  EXPECT_THROW(sim_pos(z, x), NumericError);
  EXPECT_THROW(sim_pos(x, tiny), NumericError);
  EXPECT_THROW(sim_neg(z, x, 0.5), NumericError);
}

TEST(Cosine, PositiveGradientIsOrthogonalToInput) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto x1 = random_vec(rng, 4), x2 = random_vec(rng, 4);
    const auto g = sim_pos_grad(x1, x2);
    double dot = 0.0;
    for (std::size_t i = 0; i < x1.size(); ++i) dot += g.d_x1[i] * x1[i];
    EXPECT_NEAR(dot, 0.0, 1e-12);
  }
}

TEST(LossSim, DisentangledTargetAndSelf) {
  const LatentPair hq{{1.0, 2.0}, {1.0, 0.0}};
  const LatentPair hk{{1.0, 2.0}, {0.0, 3.0}};
  EXPECT_EQ(loss_sim(hq, hk, 0.5), 0.0);
  EXPECT_EQ(loss_sim(hq, hq, 0.5), 0.5);
  EXPECT_THROW(loss_sim(hq, LatentPair{{1.0}, {1.0}}, 0.5), ShapeError);
}

TEST(Swap, InvolutionAndTagRouting) {
  const LatentPair hq{{1, 2}, {3, 4}}, hk{{5, 6}, {7, 8}};
  const auto s = swap(hq, hk);
  EXPECT_EQ(s.qk, (LatentPair{{1, 2}, {7, 8}}));
  EXPECT_EQ(s.kq, (LatentPair{{5, 6}, {3, 4}}));
  // Swapping the composites back restores the originals.
  const auto back = swap(s.kq, s.qk);
  EXPECT_EQ(back.kq, hq);
  EXPECT_EQ(back.qk, hk);
  const auto same = swap(hq, hq);
  EXPECT_EQ(same.qk, hq);
  EXPECT_EQ(same.kq, hq);
}

TEST(Swap, OrientationSelectsComposites) {
  const LatentPair hq{{1}, {2}}, hk{{3}, {4}};
  const auto [q_bg, k_bg] = reconstruction_inputs(hq, hk, SwapOrientation::keep_background);
  EXPECT_EQ(q_bg, (LatentPair{{3}, {2}}));
  EXPECT_EQ(k_bg, (LatentPair{{1}, {4}}));
  const auto [q_s, k_s] = reconstruction_inputs(hq, hk, SwapOrientation::keep_signer);
  EXPECT_EQ(q_s, (LatentPair{{1}, {4}}));
  EXPECT_EQ(k_s, (LatentPair{{3}, {2}}));
}

TEST(LossRec, Examples) {
  const std::vector<double> f{0.2, -0.4, 1.0};
  EXPECT_EQ(loss_rec(f, f, f, f), 0.0);
  std::vector<double> off(f);
  off[1] += 1.0;
  EXPECT_DOUBLE_EQ(loss_rec(off, f, f, f), 1.0);
  EXPECT_EQ(loss_rec(std::vector<double>{0.5, -0.5}, std::vector<double>{0.0, 0.0},
                     std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0}),
            1.0);
  EXPECT_THROW(loss_rec(f, off, f, std::vector<double>{1.0}), ShapeError);
}

TEST(LossRec, SwapIsNoOpWhenBranchesAgree) {
  Rng rng(4);
  const DaeParams p = DaeParams::init(8, rng);
  for (int k = 0; k < 20; ++k) {
    const auto f = random_vec(rng, 8);
    const LatentPair h = encode(p, f);
    const auto [zq, zk] = reconstruction_inputs(h, h, SwapOrientation::keep_background);
    const double swapped = loss_rec(decode(p, zq), f, decode(p, zk), f);
    const double direct = loss_rec(decode(p, h), f, decode(p, h), f);
    EXPECT_EQ(swapped, direct);
  }
}

TEST(Autoencoder, IdentityConfigurationRoundTrips) {
  const DaeParams p = DaeParams::identity(4);
  const std::vector<double> f{0.1, -0.2, 0.3, 0.4};
  const auto h = encode(p, f);
  EXPECT_EQ(h.signer, (std::vector<double>{0.1, -0.2}));
  EXPECT_EQ(h.background, (std::vector<double>{0.3, 0.4}));
  EXPECT_EQ(decode(p, h), f);
}

TEST(Autoencoder, ZeroParamsGiveZeroOutputs) {
  Rng rng(5);
  DaeParams p = DaeParams::init(8, rng);
  for (auto t : p.tensors()) std::fill(t.begin(), t.end(), 0.0);
  const auto h = encode(p, random_vec(rng, 8));
  for (double v : h.concat()) EXPECT_EQ(v, 0.0);
  for (double v : decode(p, h)) EXPECT_EQ(v, 0.0);
}

TEST(Autoencoder, ShapesAndInitBounds) {
  Rng rng(6);
  const DaeParams p = DaeParams::init(10, rng, 4, 7);
  EXPECT_EQ(p.feature_dim(), 10u);
  EXPECT_EQ(p.latent_dim(), 4u);
  EXPECT_EQ(p.encoder.first.out_dim(), 7u);
  EXPECT_EQ(p.decoder.first.in_dim(), 4u);
  EXPECT_EQ(p.decoder.second.out_dim(), 10u);
  const double bound = 1.0 / std::sqrt(10.0);
  for (double w : p.encoder.first.weight.data()) EXPECT_LE(std::abs(w), bound);
  EXPECT_THROW(encode(p, random_vec(rng, 9)), ShapeError);
  EXPECT_THROW(DaeParams::init(10, rng, 5), ValidationError);
  EXPECT_THROW(DaeParams::init(10, rng), ValidationError);  // default D/2 = 5 is odd
  EXPECT_EQ(DaeParams::init(12, rng).latent_dim(), 6u);
}

TEST(Autoencoder, Deterministic) {
  Rng a(9), b(9);
  const DaeParams p = DaeParams::init(8, a), q = DaeParams::init(8, b);
  EXPECT_EQ(p, q);
  const auto f = random_vec(a, 8);
  EXPECT_EQ(encode(p, f), encode(q, f));
}

TEST(TotalLoss, Composition) {
  LossConfig cfg;
  EXPECT_EQ(total_loss(0, 0, 0, cfg), 0.0);
  EXPECT_EQ(total_loss(1.0, 0.5, 0.25, cfg), 1.75);
  cfg.external_va = 2.0;
  EXPECT_EQ(total_loss(0, 0, 0, cfg), 6.0);
  EXPECT_THROW(total_loss(std::nan(""), 0, 0, cfg), NumericError);
}

TEST(TotalLoss, LinearInAlpha) {
  // Dyadic inputs keep every partial sum exact, so linearity holds bitwise.
  Rng rng(10);
  auto dyadic = [&rng](int hi) { return static_cast<double>(rng.integer(0, hi * 8)) / 8.0; };
  for (int k = 0; k < 100; ++k) {
    LossConfig cfg;
    cfg.external_ve = dyadic(2);
    cfg.external_va = dyadic(2);
    const double a = dyadic(10), b = dyadic(10);
    const double ctc = dyadic(5), sim = dyadic(2), rec = dyadic(5);
    cfg.alpha = 0.0;
    const double l0 = total_loss(ctc, sim, rec, cfg);
    cfg.alpha = a;
    const double la = total_loss(ctc, sim, rec, cfg);
    cfg.alpha = b;
    const double lb = total_loss(ctc, sim, rec, cfg);
    EXPECT_EQ(l0, ctc + cfg.external_ve + sim + rec);
    EXPECT_EQ(la, l0 + a * cfg.external_va);
    EXPECT_EQ(la - lb, (a - b) * cfg.external_va);
    EXPECT_GE(la, ctc);
  }
}

TEST(MomentumUpdate, Endpoints) {
  Rng rng(11);
  const DaeParams student = DaeParams::init(8, rng);
  const DaeParams teacher0 = DaeParams::init(8, rng);
  DaeParams t = teacher0;
  momentum_update(t, student, 1.0);
  EXPECT_EQ(t, teacher0);
  momentum_update(t, student, 0.0);
  EXPECT_EQ(t, student);
  ScalarParams a{{2.0}}, b{{0.0}};
  momentum_update(a, b, 0.5);
  EXPECT_EQ(a.values[0], 1.0);
  EXPECT_THROW(momentum_update(a, b, 1.5), ValidationError);
  ScalarParams wrong{{1.0, 2.0}};
  EXPECT_THROW(momentum_update(a, wrong, 0.5), ShapeError);
}

TEST(MomentumUpdate, ContractionTowardStudent) {
  Rng rng(12);
  const DaeParams student = DaeParams::init(8, rng);
  DaeParams t = DaeParams::init(8, rng);
  const DaeParams before = t;
  momentum_update(t, student, 0.7);
  const auto ts = t.tensors();
  const auto ss = student.tensors();
  const auto bs = before.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k)
    for (std::size_t i = 0; i < ts[k].size(); ++i)
      EXPECT_NEAR(std::abs(ts[k][i] - ss[k][i]), 0.7 * std::abs(bs[k][i] - ss[k][i]), 1e-15);
}

TEST(MomentumUpdate, ClosedFormEwmaTrajectory) {
  for (double m : {0.0, 0.5, 0.9, 0.99, 0.999, 1.0}) {
    ScalarParams teacher{{3.0, -1.0}}, student{{0.25, 2.0}};
    for (int n = 1; n <= 1000; ++n) {
      momentum_update(teacher, student, m);
      const double decay = std::pow(m, n);
      EXPECT_NEAR(teacher.values[0], 0.25 + decay * (3.0 - 0.25), 1e-12);
      EXPECT_NEAR(teacher.values[1], 2.0 + decay * (-1.0 - 2.0), 1e-12);
    }
  }
}

TEST(DaeGradients, ClampedRegionAndExactReconstructionVanish) {
  // Identity DAE, teacher background orthogonal to the student's, and f_k
  // reconstructed exactly: only the positive term can carry gradient, and it
  // is zero because the signer halves are aligned.
  const DaeParams p = DaeParams::identity(4);
  const std::vector<double> f_q{1.0, 2.0, 1.0, 0.0};
  const std::vector<double> f_k{1.0, 2.0, 0.0, 3.0};
  const auto r = dae_grads(p, {f_q, teacher_view(p, f_k)}, LossConfig{});
  EXPECT_EQ(r.l_sim, 0.0);
  EXPECT_EQ(r.l_rec, 0.0);
  for (double g : r.grads.d_f_q) EXPECT_EQ(g, 0.0);
  for (auto t : r.grads.params.tensors())
    for (double g : t) EXPECT_EQ(g, 0.0);
}

TEST(DaeGradients, DetachedTargetAndScaleOptions) {
  Rng rng(13);
  const DaeParams p = DaeParams::init(6, rng, 4, 5);
  const DaeParams teacher = DaeParams::init(6, rng, 4, 5);
  const auto f_q = random_vec(rng, 6), f_k = random_vec(rng, 6);
  const auto tv = teacher_view(teacher, f_k);
  const LossConfig cfg;
  const auto fw = dae_forward(p, f_q, tv, cfg);
  const auto full = dae_backward(p, fw, tv, cfg);
  const auto detached = dae_backward(p, fw, tv, cfg, 1.0, {}, {1.0, true});
  // Detaching only removes the direct -sign(f_hat_q - f_q) term on f_q.
  for (std::size_t i = 0; i < f_q.size(); ++i)
    EXPECT_NEAR(detached.d_f_q[i] - full.d_f_q[i],
                l1_sign(fw.dec_q.output[i] - f_q[i]), 1e-12);
  EXPECT_EQ(detached.params, full.params);
  // A zero scale removes L_rec from the decoder gradient entirely.
  const auto no_rec = dae_backward(p, fw, tv, cfg, 1.0, {}, {0.0, false});
  for (double g : no_rec.params.decoder.second.weight.data()) EXPECT_EQ(g, 0.0);
}

TEST(DaeGradients, TeacherViewIsUntouched) {
  Rng rng(14);
  const DaeParams p = DaeParams::init(8, rng);
  const DaeParams teacher = DaeParams::init(8, rng);
  const auto tv = teacher_view(teacher, random_vec(rng, 8));
  const auto tv_copy = tv;
  const DaeParams teacher_copy = teacher;
  (void)dae_grads(p, {random_vec(rng, 8), tv}, LossConfig{});
  EXPECT_EQ(tv.f_k, tv_copy.f_k);
  EXPECT_EQ(tv.h_k, tv_copy.h_k);
  EXPECT_EQ(teacher, teacher_copy);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  testsupport::TempDir dir("ckpt");
  Rng rng(15);
  const DaeParams p = DaeParams::init(12, rng, 6, 9);
  save_params(dir / "dae.bin", p);
  EXPECT_EQ(load_params(dir / "dae.bin"), p);
  // 4-byte version + count, 8 bytes of shape per layer, then the payload.
  std::size_t payload = 0;
  for (auto t : p.tensors()) payload += t.size();
  EXPECT_EQ(std::filesystem::file_size(dir / "dae.bin"), 8 + 4 * 8 + payload * 8);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  testsupport::TempDir dir("ckpt_bad");
  Rng rng(16);
  save_params(dir / "dae.bin", DaeParams::init(4, rng));
  auto bytes = read_bytes(dir / "dae.bin");
  write_bytes(dir / "short.bin", {bytes.begin(), bytes.end() - 3});
  EXPECT_THROW(load_params(dir / "short.bin"), IoError);
  auto bad_version = bytes;
  bad_version[0] = 9;
  write_bytes(dir / "ver.bin", bad_version);
  EXPECT_THROW(load_params(dir / "ver.bin"), IoError);
  EXPECT_THROW(load_params(dir / "missing.bin"), IoError);
}

TEST(Checkpoint, LossConfigJsonRoundTrip) {
  LossConfig c;
  c.margin = 0.25;
  c.alpha = 5.0;
  c.momentum = 0.9;
  c.orientation = SwapOrientation::keep_signer;
  const LossConfig back = nlohmann::json(c).get<LossConfig>();
  EXPECT_EQ(back.margin, 0.25);
  EXPECT_EQ(back.alpha, 5.0);
  EXPECT_EQ(back.momentum, 0.9);
  EXPECT_EQ(back.orientation, SwapOrientation::keep_signer);
  EXPECT_THROW(nlohmann::json({{"momentum", 2.0}}).get<LossConfig>(), ValidationError);
}
