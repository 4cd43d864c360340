#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "slrobust/core/error.hpp"

namespace slrobust::metrics {

using GlossSeq = std::vector<std::string>;

/// Splits on whitespace; empty input gives an empty sequence.
inline GlossSeq parse_glosses(const std::string& line) {
  GlossSeq out;
  std::istringstream in(line);
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

enum class EditOp { match, substitution, deletion, insertion };

struct AlignStep {
  EditOp op;
  // Index into ref (match/substitution/deletion) and hyp (match/substitution/insertion).
  // The unused side is npos.
  std::size_t ref_index;
  std::size_t hyp_index;
};

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t matches = 0;
  std::size_t ref_len = 0;
  std::size_t hyp_len = 0;
  double wer = 0.0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }

  WerBreakdown& operator+=(const WerBreakdown& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    matches += o.matches;
    ref_len += o.ref_len;
    hyp_len += o.hyp_len;
    wer = ref_len > 0 ? static_cast<double>(errors()) / static_cast<double>(ref_len) : 0.0;
    return *this;
  }
};

struct Alignment {
  WerBreakdown breakdown;
  std::vector<AlignStep> trace;
};

/// Minimal unit-cost alignment of hyp against ref. Backtrace prefers the
/// diagonal (match or substitution), then deletion, then insertion. With an
/// empty reference `wer` is left at 0; use `wer()` when that must be an error.
inline Alignment align_edit(const GlossSeq& ref, const GlossSeq& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::size_t> dp((n + 1) * (m + 1));
  auto cell = [&](std::size_t i, std::size_t j) -> std::size_t& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) cell(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) cell(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = cell(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cell(i, j) = std::min({diag, cell(i - 1, j) + 1, cell(i, j - 1) + 1});
    }

  Alignment out;
  auto& b = out.breakdown;
  b.ref_len = n;
  b.hyp_len = m;
  constexpr auto npos = static_cast<std::size_t>(-1);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (cell(i, j) == cell(i - 1, j - 1) + (same ? 0 : 1)) {
        out.trace.push_back({same ? EditOp::match : EditOp::substitution, i - 1, j - 1});
        ++(same ? b.matches : b.substitutions);
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && cell(i, j) == cell(i - 1, j) + 1) {
      out.trace.push_back({EditOp::deletion, i - 1, npos});
      ++b.deletions;
      --i;
      continue;
    }
    out.trace.push_back({EditOp::insertion, npos, j - 1});
    ++b.insertions;
    --j;
  }
  std::reverse(out.trace.begin(), out.trace.end());
  b.wer = n > 0 ? static_cast<double>(b.errors()) / static_cast<double>(n) : 0.0;
  return out;
}

inline double wer(const GlossSeq& ref, const GlossSeq& hyp) {
  if (ref.empty()) throw ValidationError("WER is undefined for an empty reference");
  return align_edit(ref, hyp).breakdown.wer;
}

/// Pools edit operations over the corpus: sum(S+D+I) / sum(ref_len).
inline WerBreakdown corpus_wer(const std::vector<std::pair<GlossSeq, GlossSeq>>& pairs) {
  if (pairs.empty()) throw ValidationError("corpus WER needs at least one pair");
  WerBreakdown total;
  for (const auto& [ref, hyp] : pairs) total += align_edit(ref, hyp).breakdown;
  if (total.ref_len == 0) throw ValidationError("corpus WER is undefined: all references empty");
  return total;
}

}  // namespace slrobust::metrics
