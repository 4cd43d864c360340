#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "slrobust/core/error.hpp"
#include "slrobust/core/matrix.hpp"

// Connectionist temporal classification over a T x V logit matrix. Label 0 is
// the blank; targets use labels 1..V-1. Everything runs in log space.
namespace slrobust::ctc {

using TargetSeq = std::vector<std::size_t>;

struct InfeasibleTarget : ValidationError {
  using ValidationError::ValidationError;
};

/// Frames needed to emit `target`: one per label plus a blank between repeats.
inline std::size_t min_frames(const TargetSeq& target) {
  std::size_t need = target.size();
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++need;
  return need;
}

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline void validate(const Matrix& logits, const TargetSeq& target) {
  if (logits.rows() < 1) throw ShapeError("CTC needs at least one frame");
  if (logits.cols() < 2) throw ShapeError("CTC vocabulary must include blank plus one label");
  if (!all_finite(logits.data())) throw NumericError("CTC logits contain non-finite values");
  for (std::size_t l : target)
    if (l == 0 || l >= logits.cols())
      throw ValidationError("CTC target label " + std::to_string(l) + " outside [1, V-1]");
  const std::size_t need = min_frames(target);
  if (logits.rows() < need)
    throw InfeasibleTarget("CTC target needs " + std::to_string(need) + " frames, got " +
                           std::to_string(logits.rows()));
}

inline Matrix log_probs(const Matrix& logits) {
  Matrix lp(logits.rows(), logits.cols());
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const auto row = log_softmax(logits.row(t));
    std::copy(row.begin(), row.end(), lp.row(t).begin());
  }
  return lp;
}

// Blank-interleaved target: b, l1, b, l2, ..., lL, b.
inline std::vector<std::size_t> extend(const TargetSeq& target) {
  std::vector<std::size_t> ext(2 * target.size() + 1, 0);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

struct Lattice {
  Matrix log_prob;   // T x V
  Matrix log_alpha;  // T x S, includes the emission at t
  Matrix log_beta;   // T x S, excludes the emission at t
  std::vector<std::size_t> ext;
  double log_likelihood = kNegInf;
};

inline bool can_skip(const std::vector<std::size_t>& ext, std::size_t s) {
  return s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2];
}

inline Lattice forward_backward(const Matrix& logits, const TargetSeq& target) {
  validate(logits, target);
  Lattice lat;
  lat.log_prob = log_probs(logits);
  lat.ext = extend(target);
  const std::size_t T = logits.rows();
  const std::size_t S = lat.ext.size();
  const auto& ext = lat.ext;
  const auto& lp = lat.log_prob;

  lat.log_alpha = Matrix(T, S, kNegInf);
  auto& a = lat.log_alpha;
  a(0, 0) = lp(0, ext[0]);
  if (S > 1) a(0, 1) = lp(0, ext[1]);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = log_sum_exp(acc, a(t - 1, s - 1));
      if (can_skip(ext, s)) acc = log_sum_exp(acc, a(t - 1, s - 2));
      if (acc != kNegInf) a(t, s) = acc + lp(t, ext[s]);
    }

  lat.log_beta = Matrix(T, S, kNegInf);
  auto& b = lat.log_beta;
  b(T - 1, S - 1) = 0.0;
  if (S > 1) b(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t s = 0; s < S; ++s) {
      double acc = b(t + 1, s) + lp(t + 1, ext[s]);
      if (s + 1 < S) acc = log_sum_exp(acc, b(t + 1, s + 1) + lp(t + 1, ext[s + 1]));
      if (s + 2 < S && can_skip(ext, s + 2))
        acc = log_sum_exp(acc, b(t + 1, s + 2) + lp(t + 1, ext[s + 2]));
      b(t, s) = acc;
    }

  double ll = a(T - 1, S - 1);
  if (S > 1) ll = log_sum_exp(ll, a(T - 1, S - 2));
  lat.log_likelihood = ll;
  return lat;
}

}  // namespace detail

/// Negative log-probability that the framewise softmax emits a path which
/// collapses to `target`.
inline double ctc_loss(const Matrix& logits, const TargetSeq& target) {
  return -detail::forward_backward(logits, target).log_likelihood;
}

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits, T x V
};

inline LossAndGrad ctc_loss_and_grad(const Matrix& logits, const TargetSeq& target) {
  const auto lat = detail::forward_backward(logits, target);
  const std::size_t T = logits.rows();
  const std::size_t V = logits.cols();
  const std::size_t S = lat.ext.size();
  LossAndGrad out{-lat.log_likelihood, Matrix(T, V)};
  for (std::size_t t = 0; t < T; ++t) {
    // Occupancy per vocabulary entry, accumulated in log space.
    std::vector<double> occ(V, detail::kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const double v = lat.log_alpha(t, s) + lat.log_beta(t, s);
      occ[lat.ext[s]] = log_sum_exp(occ[lat.ext[s]], v);
    }
    for (std::size_t k = 0; k < V; ++k) {
      const double p = std::exp(lat.log_prob(t, k));
      const double gamma =
          occ[k] == detail::kNegInf ? 0.0 : std::exp(occ[k] - lat.log_likelihood);
      out.grad(t, k) = p - gamma;
    }
  }
  if (!all_finite(out.grad.data())) throw NumericError("CTC gradient is not finite");
  return out;
}

inline Matrix ctc_grad(const Matrix& logits, const TargetSeq& target) {
  return ctc_loss_and_grad(logits, target).grad;
}

/// Best-path decoding: framewise argmax (lowest index on ties), collapse
/// repeats, drop blanks.
inline TargetSeq greedy_decode(const Matrix& logits) {
  TargetSeq out;
  std::size_t prev = 0;
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const auto row = logits.row(t);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k] > row[best]) best = k;
    if (best != 0 && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

/// Collapses a framewise label path the way CTC does.
inline TargetSeq collapse(const std::vector<std::size_t>& path) {
  TargetSeq out;
  std::size_t prev = 0;
  for (std::size_t k : path) {
    if (k != 0 && k != prev) out.push_back(k);
    prev = k;
  }
  return out;
}

/// Exhaustive oracle: sums the probability of every one of the V^T paths that
/// collapses to `target`. Returns +inf when none does.
inline double brute_force_ctc(const Matrix& logits, const TargetSeq& target) {
  const std::size_t T = logits.rows();
  const std::size_t V = logits.cols();
  double paths = 1.0;
  for (std::size_t t = 0; t < T; ++t) paths *= static_cast<double>(V);
  if (paths > 1e6) throw ValidationError("brute-force CTC limited to V^T <= 1e6 paths");
  const Matrix lp = detail::log_probs(logits);

  std::vector<std::size_t> path(T, 0);
  double total = detail::kNegInf;
  for (;;) {
    if (collapse(path) == target) {
      double lpath = 0.0;
      for (std::size_t t = 0; t < T; ++t) lpath += lp(t, path[t]);
      total = log_sum_exp(total, lpath);
    }
    std::size_t t = 0;
    while (t < T && ++path[t] == V) path[t++] = 0;
    if (t == T) break;
  }
  return -total;
}

}  // namespace slrobust::ctc
