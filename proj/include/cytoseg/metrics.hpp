#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "cytoseg/raster.hpp"

// Per-cell Dice and pooled pixel / object rates for overlapping-cell
// segmentations.

namespace cytoseg {

/// A cell counts as well segmented when its Dice exceeds this value.
inline constexpr double kGoodDice = 0.7;

/// 2|X n Y| / (|X| + |Y|); two empty masks score 1.
inline double dice(const BinaryMask& x, const BinaryMask& y) {
  require_same_shape(x, y, "dice operands must have the same dimensions");
  std::size_t inter = 0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool a = x[i] != 0;
    const bool b = y[i] != 0;
    nx += a;
    ny += b;
    inter += a && b;
  }
  if (nx + ny == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(nx + ny);
}

struct CellMatch {
  std::size_t gt_index = 0;
  std::optional<std::size_t> pred_index;
  double dc = 0.0;
};

/// Greedy one-to-one matching by descending Dice: the unmatched pair with
/// the largest positive Dice is taken first (ties: lower gt index, then lower
/// pred index). Unmatched ground-truth cells get dc = 0. Output is ordered by
/// gt index.
inline std::vector<CellMatch> match_cells(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt) {
  std::vector<std::vector<double>> score(gt.size(), std::vector<double>(pred.size(), 0.0));
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p) score[g][p] = dice(pred[p], gt[g]);

  std::vector<CellMatch> out(gt.size());
  for (std::size_t g = 0; g < gt.size(); ++g) out[g].gt_index = g;
  std::vector<bool> gt_used(gt.size(), false);
  std::vector<bool> pred_used(pred.size(), false);
  for (;;) {
    double best = 0.0;
    std::size_t bg = 0;
    std::size_t bp = 0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt_used[g]) continue;
      for (std::size_t p = 0; p < pred.size(); ++p) {
        if (!pred_used[p] && score[g][p] > best) {
          best = score[g][p];
          bg = g;
          bp = p;
        }
      }
    }
    if (best <= 0.0) break;
    gt_used[bg] = true;
    pred_used[bp] = true;
    out[bg].pred_index = bp;
    out[bg].dc = best;
  }
  return out;
}

struct PixelRates {
  double tpr = 0.0;        // |S n P| / |P|
  double fpr = 0.0;        // |S \ P| / |S|
  double tpr_prose = 0.0;  // |S n P| / |S|
};

/// Pooled pixel rates with P the union of ground-truth cells and S the union
/// of predicted cells. An empty prediction gives all-zero rates.
inline PixelRates pixel_rates(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt) {
  detail::require(!gt.empty(), ErrorCode::invalid_argument, "ground truth has no cells");
  const int w = gt.front().width();
  const int h = gt.front().height();
  BinaryMask s(w, h);
  BinaryMask p(w, h);
  for (const auto& m : gt) {
    require_same_shape(p, m, "ground-truth masks differ in size");
    for (std::size_t i = 0; i < m.size(); ++i) p[i] |= m[i] ? 1 : 0;
  }
  for (const auto& m : pred) {
    require_same_shape(s, m, "predicted masks differ in size");
    for (std::size_t i = 0; i < m.size(); ++i) s[i] |= m[i] ? 1 : 0;
  }
  std::size_t ns = 0;
  std::size_t np = 0;
  std::size_t inter = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ns += s[i];
    np += p[i];
    inter += s[i] && p[i];
  }
  detail::require(np > 0, ErrorCode::invalid_argument, "ground-truth union is empty");
  PixelRates r;
  if (ns == 0) return r;
  r.tpr = static_cast<double>(inter) / static_cast<double>(np);
  r.fpr = static_cast<double>(ns - inter) / static_cast<double>(ns);
  r.tpr_prose = static_cast<double>(inter) / static_cast<double>(ns);
  return r;
}

/// Fraction of ground-truth cells whose Dice is at most kGoodDice.
inline double object_fno(const std::vector<CellMatch>& matching) {
  detail::require(!matching.empty(), ErrorCode::invalid_argument, "no ground-truth cells");
  std::size_t bad = 0;
  for (const auto& m : matching) bad += m.dc <= kGoodDice ? 1 : 0;
  return static_cast<double>(bad) / static_cast<double>(matching.size());
}

struct EvalReport {
  std::vector<CellMatch> per_cell_dc;
  double dc_mean = 0.0;
  double dc_std = 0.0;  // population standard deviation
  double tpr = 0.0;
  double tpr_prose = 0.0;
  double fpr = 0.0;
  double fno = 0.0;
  double good_threshold = kGoodDice;
};

inline EvalReport evaluate(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt) {
  detail::require(!gt.empty(), ErrorCode::invalid_argument, "ground truth has no cells");
  EvalReport r;
  r.per_cell_dc = match_cells(pred, gt);
  double sum = 0.0;
  for (const auto& m : r.per_cell_dc) sum += m.dc;
  r.dc_mean = sum / static_cast<double>(r.per_cell_dc.size());
  double sq = 0.0;
  for (const auto& m : r.per_cell_dc) sq += (m.dc - r.dc_mean) * (m.dc - r.dc_mean);
  r.dc_std = std::sqrt(sq / static_cast<double>(r.per_cell_dc.size()));
  const auto rates = pixel_rates(pred, gt);
  r.tpr = rates.tpr;
  r.tpr_prose = rates.tpr_prose;
  r.fpr = rates.fpr;
  r.fno = object_fno(r.per_cell_dc);
  return r;
}

}  // namespace cytoseg
