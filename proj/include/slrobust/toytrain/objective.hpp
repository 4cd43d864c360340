#pragma once

#include <cmath>
#include <vector>

#include "slrobust/core/affine.hpp"
#include "slrobust/ctc/ctc.hpp"
#include "slrobust/dae/dae.hpp"
#include "slrobust/media/image.hpp"
#include "slrobust/toytrain/model.hpp"

namespace slrobust::toytrain {

struct LossParts {
  double ctc = 0.0;
  double sim = 0.0;  // mean over frames
  double rec = 0.0;  // mean over frames

  LossParts& operator+=(const LossParts& o) {
    ctc += o.ctc;
    sim += o.sim;
    rec += o.rec;
    return *this;
  }
  LossParts scaled(double w) const { return {ctc * w, sim * w, rec * w}; }
};

/// Inputs for one clip. `teacher_view` must have as many frames as
/// `student_view`; it is ignored when the DAE is disabled.
struct ClipSample {
  const media::Video* student_view = nullptr;
  const media::Video* teacher_view = nullptr;
  ctc::TargetSeq target;
};

namespace detail {

inline void push_relu_signs(std::vector<signed char>& sig, const std::vector<double>& pre) {
  for (double z : pre) sig.push_back(z > 0.0 ? 1 : (z < 0.0 ? -1 : 0));
}

}  // namespace detail

/// Per-clip objective CTC + mean_t(L_sim + rec.scale * L_rec). When `grad` is non-null,
/// accumulates `weight` times its gradient w.r.t. the student. The teacher is
/// read-only and receives nothing. `kinks`, when non-null, collects the signs
/// of every piecewise-linear switch the loss passes through.
inline LossParts clip_objective(const Student& student, const Branch* teacher,
                                const ClipSample& sample, const dae::LossConfig& cfg,
                                std::size_t pool, double weight = 1.0, Student* grad = nullptr,
                                std::vector<signed char>* kinks = nullptr,
                                const dae::RecGradOptions& rec = {}) {
  const media::Video& sv = *sample.student_view;
  const std::size_t T = sv.frames.size();
  const bool use_dae = student.dae_enabled;
  if (use_dae && (teacher == nullptr || sample.teacher_view == nullptr))
    throw ValidationError("DAE objective needs a teacher and a teacher view");
  if (use_dae && sample.teacher_view->frames.size() != T)
    throw ShapeError("student and teacher views differ in frame count");

  const auto fq = extract_features(student.branch.backbone, sv, pool);
  std::vector<dae::TeacherView> tvs;
  std::vector<dae::DaeForward> fws;
  Matrix logits(T, student.classifier.out_dim());
  LossParts parts;
  for (std::size_t t = 0; t < T; ++t) {
    const std::vector<double>* z = &fq[t].feature;
    if (use_dae) {
      const auto fk = backbone_forward(teacher->backbone, frame_input(sample.teacher_view->frames[t], pool));
      tvs.push_back(dae::teacher_view(teacher->dae, fk.feature));
      fws.push_back(dae::dae_forward(student.branch.dae, fq[t].feature, tvs.back(), cfg));
      parts.sim += fws.back().l_sim;
      parts.rec += rec.scale * fws.back().l_rec;
      z = &fws.back().h_q.signer;
    }
    const auto row = student.classifier.forward(*z);
    std::copy(row.begin(), row.end(), logits.row(t).begin());
  }
  parts.sim /= static_cast<double>(T);
  parts.rec /= static_cast<double>(T);

  if (kinks) {
    for (std::size_t t = 0; t < T; ++t) {
      detail::push_relu_signs(*kinks, fq[t].pre);
      if (use_dae) {
        const auto s = fws[t].kink_signature(tvs[t]);
        kinks->insert(kinks->end(), s.begin(), s.end());
      }
    }
  }

  if (!grad) {
    parts.ctc = ctc::ctc_loss(logits, sample.target);
    return parts;
  }
  const auto ctc_res = ctc::ctc_loss_and_grad(logits, sample.target);
  parts.ctc = ctc_res.loss;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> d_logits(ctc_res.grad.row(t).begin(), ctc_res.grad.row(t).end());
    for (double& g : d_logits) g *= weight;
    const std::vector<double>& z = use_dae ? fws[t].h_q.signer : fq[t].feature;
    const auto d_z = student.classifier.backward(z, d_logits, grad->classifier);
    if (use_dae) {
      const auto g = dae::dae_backward(student.branch.dae, fws[t], tvs[t], cfg,
                                       weight / static_cast<double>(T), d_z, rec);
      axpy(grad->branch.dae, g.params, 1.0);
      backbone_backward(student.branch.backbone, fq[t], g.d_f_q, grad->branch.backbone);
    } else {
      backbone_backward(student.branch.backbone, fq[t], d_z, grad->branch.backbone);
    }
  }
  return parts;
}

/// Scalar objective over a batch: mean of per-clip parts combined through
/// dae::total_loss.
inline double batch_loss(const LossParts& mean_parts, const dae::LossConfig& cfg) {
  return dae::total_loss(mean_parts.ctc, mean_parts.sim, mean_parts.rec, cfg);
}

}  // namespace slrobust::toytrain
