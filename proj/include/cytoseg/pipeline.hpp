#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cytoseg/levelset.hpp"
#include "cytoseg/morphology.hpp"
#include "cytoseg/preprocess.hpp"
#include "cytoseg/raster.hpp"
#include "cytoseg/thresholding.hpp"

// Scene-to-cells orchestration: optional focus fusion, clump segmentation,
// per-clump nucleus thresholding, per-nucleus contour evolution.

namespace cytoseg {

struct PipelineConfig {
  int median_kernel = 5;
  int ahe_tiles = 8;
  double ahe_clip = 0.01;
  int hmax_h = 30;
  // Reference area for 1024 x 1024 inputs; scaled by image area.
  std::size_t min_clump_area = 2000;
  std::size_t min_nucleus_area = 100;
  double nucleus_prior = 0.05;
  int init_disc_margin = 5;
  DrlseParams drlse;
  int edf_window = 9;

  void validate() const {
    using detail::require;
    require(median_kernel >= 1 && median_kernel % 2 == 1, ErrorCode::invalid_argument,
            "median_kernel must be odd and positive");
    require(ahe_tiles >= 1, ErrorCode::invalid_argument, "ahe_tiles must be >= 1");
    require(ahe_clip > 0.0 && ahe_clip <= 1.0, ErrorCode::invalid_argument, "ahe_clip must lie in (0, 1]");
    require(hmax_h >= 1, ErrorCode::invalid_argument, "hmax_h must be >= 1");
    NucleusPrior{nucleus_prior};
    require(init_disc_margin >= 0, ErrorCode::invalid_argument, "init_disc_margin must be non-negative");
    require(edf_window >= 1 && edf_window % 2 == 1, ErrorCode::invalid_argument, "edf_window must be odd and positive");
    drlse.validate();
  }

  /// min_clump_area scaled from the 1024 x 1024 reference to this image.
  std::size_t scaled_min_clump_area(int width, int height) const {
    const double scale = static_cast<double>(width) * height / (1024.0 * 1024.0);
    return static_cast<std::size_t>(std::llround(static_cast<double>(min_clump_area) * scale));
  }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct StageTiming {
  std::string stage;
  double milliseconds = 0.0;
};

/// Per-nucleus record of how its cell was obtained.
struct CellTrace {
  int clump = 0;  // clump label
  bool single_nucleus = false;
  int iterations = 0;
  bool converged = false;
};

struct Provenance {
  PipelineConfig config;
  bool degenerate_scene = false;
  std::vector<CellTrace> cells;
  std::vector<StageTiming> timings;
};

struct SegmentationResult {
  LabelMap clumps;
  LabelMap nuclei;
  std::vector<Point2> nucleus_centroids;
  std::vector<BinaryMask> cells;  // cells[i] belongs to nucleus label i + 1
  Provenance provenance;
};

/// Focus stacking: each pixel takes its value from the plane with the
/// largest local variance over a window x window neighbourhood (edge
/// replicated); ties go to the lowest plane index.
inline GrayImage edf_fuse(const std::vector<GrayImage>& stack, int window) {
  detail::require(!stack.empty(), ErrorCode::invalid_argument, "focus stack is empty");
  detail::require(window >= 1 && window % 2 == 1, ErrorCode::invalid_argument, "window must be odd and positive");
  const int w = stack.front().width();
  const int h = stack.front().height();
  for (const auto& img : stack) {
    detail::require(img.width() == w && img.height() == h && img.l_max() == stack.front().l_max(),
                    ErrorCode::dimension_mismatch, "focus stack planes differ in size or range");
  }
  const int r = window / 2;
  const double n = static_cast<double>(window) * window;
  ScalarField best(w, h, -1.0);
  GrayImage out(w, h, 0, stack.front().l_max());
  ScalarField row_s(w, h);
  ScalarField row_q(w, h);
  for (const auto& img : stack) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        double q = 0.0;
        for (int d = -r; d <= r; ++d) {
          const double v = img.clamped(x + d, y);
          s += v;
          q += v * v;
        }
        row_s(x, y) = s;
        row_q(x, y) = q;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        double q = 0.0;
        for (int d = -r; d <= r; ++d) {
          s += row_s.clamped(x, y + d);
          q += row_q.clamped(x, y + d);
        }
        const double mean = s / n;
        const double var = std::max(0.0, q / n - mean * mean);
        if (var > best(x, y)) {
          best(x, y) = var;
          out(x, y) = img(x, y);
        }
      }
    }
  }
  return out;
}

struct ClumpSegmentation {
  LabelMap clumps;
  GrayImage denoised;      // median filtered
  GrayImage preprocessed;  // denoised, then equalized
  bool degenerate = false;
};

/// Clump extraction: median -> CLAHE -> h-maxima suppression; the bright
/// background then forms regional-maximum plateaus of the suppressed image,
/// and everything outside them is clump candidate. Candidates are hole-filled,
/// labelled (8-connected) and filtered by the scaled minimum clump area.
///
/// A scene is degenerate when the suppressed image is flat or candidates
/// cover more than 90% of it; degenerate scenes yield no clumps.
inline ClumpSegmentation segment_clumps(const GrayImage& image, const PipelineConfig& cfg) {
  cfg.validate();
  ClumpSegmentation r;
  r.denoised = median_filter(image, cfg.median_kernel);
  r.preprocessed = adaptive_hist_eq(r.denoised, cfg.ahe_tiles, cfg.ahe_clip);
  const auto suppressed = h_maxima_suppress(r.preprocessed, cfg.hmax_h);
  const auto background = regional_maxima(suppressed);
  BinaryMask candidate(image.width(), image.height());
  for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] = background[i] ? 0 : 1;

  const auto [lo, hi] = std::minmax_element(suppressed.data().begin(), suppressed.data().end());
  const bool flat = suppressed.empty() || *lo == *hi;
  if (flat || static_cast<double>(count(candidate)) > 0.9 * static_cast<double>(candidate.size())) {
    r.clumps = LabelMap(image.width(), image.height());
    r.degenerate = true;
    return r;
  }
  r.clumps = remove_small_components(connected_components(fill_holes(candidate), Connectivity::eight),
                                     cfg.scaled_min_clump_area(image.width(), image.height()));
  return r;
}

struct NucleusSegmentation {
  LabelMap nuclei;
  std::vector<Point2> centroids;  // centroids[i] is label i + 1
  std::optional<ThresholdResult> threshold;
};

/// Nuclei inside one clump: prior-weighted Otsu on the clump histogram, dark
/// class kept, holes filled, components below min_nucleus_area dropped.
/// A clump with a single intensity level has no nuclei.
inline NucleusSegmentation segment_nuclei(const GrayImage& preprocessed, const BinaryMask& clump,
                                          const PipelineConfig& cfg) {
  require_same_shape(preprocessed, clump, "clump must match the image");
  NucleusSegmentation r;
  r.nuclei = LabelMap(preprocessed.width(), preprocessed.height());
  const auto p = normalize(compute_histogram(preprocessed, clump));
  try {
    r.threshold = modified_otsu(p, NucleusPrior{cfg.nucleus_prior});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_distribution) throw;
    return r;
  }
  const auto dark = fill_holes(apply_threshold(preprocessed, r.threshold->t, clump));
  r.nuclei = remove_small_components(connected_components(dark, Connectivity::eight), cfg.min_nucleus_area);

  std::vector<double> sx(static_cast<std::size_t>(r.nuclei.n_labels()) + 1, 0.0);
  std::vector<double> sy(sx.size(), 0.0);
  std::vector<double> n(sx.size(), 0.0);
  for (int y = 0; y < r.nuclei.height(); ++y) {
    for (int x = 0; x < r.nuclei.width(); ++x) {
      const auto l = static_cast<std::size_t>(r.nuclei(x, y));
      sx[l] += x;
      sy[l] += y;
      n[l] += 1.0;
    }
  }
  for (std::size_t l = 1; l < sx.size(); ++l) r.centroids.push_back({sx[l] / n[l], sy[l] / n[l]});
  return r;
}

namespace detail {

struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

inline Box bounding_box(const BinaryMask& m, int pad) {
  Box b{m.width(), m.height(), 0, 0};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
      }
  b.x0 = std::max(0, b.x0 - pad);
  b.y0 = std::max(0, b.y0 - pad);
  b.x1 = std::min(m.width(), b.x1 + pad);
  b.y1 = std::min(m.height(), b.y1 + pad);
  return b;
}

template <typename R>
R crop(const R& src, const Box& b) {
  R out(b.width(), b.height());
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) out(x, y) = src(b.x0 + x, b.y0 + y);
  return out;
}

}  // namespace detail

struct CellSegmentation {
  BinaryMask cell;
  int iterations = 0;
  bool converged = false;
};

/// One cell from one nucleus. A clump holding a single nucleus is the cell.
/// Otherwise a contour seeded at the nucleus grown by init_disc_margin
/// expands under DRLSE with the clump complement as a hard barrier; the cell
/// is the final interior joined with the nucleus.
///
/// `edges` is the edge indicator of the whole image. Evolution
/// runs on the clump's bounding box plus a 4 pixel ring; since the ring is
/// barrier, the result equals a full-frame run apart from the convergence
/// test, whose changed-pixel fraction is relative to the box.
inline CellSegmentation segment_cell(const ScalarField& edges, const BinaryMask& clump, const BinaryMask& nucleus,
                                     const PipelineConfig& cfg, int n_nuclei_in_clump) {
  require_same_shape(edges, clump, "clump must match the image");
  require_same_shape(edges, nucleus, "nucleus must match the image");
  detail::require(n_nuclei_in_clump >= 1, ErrorCode::invalid_argument, "clump must hold at least one nucleus");
  for (std::size_t i = 0; i < nucleus.size(); ++i) {
    detail::require(!nucleus[i] || clump[i], ErrorCode::invalid_argument, "nucleus lies outside its clump");
  }
  detail::require(count(nucleus) > 0, ErrorCode::empty_seed, "nucleus mask is empty");
  if (n_nuclei_in_clump == 1) return {clump, 0, true};

  const auto box = detail::bounding_box(clump, 4);
  const auto local_clump = detail::crop(clump, box);
  const auto local_nucleus = detail::crop(nucleus, box);
  const auto local_edges = detail::crop(edges, box);
  auto seed = dilate_disc(local_nucleus, cfg.init_disc_margin);
  BinaryMask forbidden(box.width(), box.height());
  for (std::size_t i = 0; i < seed.size(); ++i) {
    seed[i] = seed[i] && local_clump[i];
    forbidden[i] = local_clump[i] ? 0 : 1;
  }
  const auto run = drlse_run(init_phi(box.width(), box.height(), seed, cfg.drlse.c0), local_edges, cfg.drlse, forbidden);
  const auto interior = zero_sublevel_mask(run.phi);

  CellSegmentation r{BinaryMask(clump.width(), clump.height()), run.iterations, run.converged};
  for (int y = 0; y < box.height(); ++y)
    for (int x = 0; x < box.width(); ++x)
      if (interior(x, y) || local_nucleus(x, y)) r.cell(box.x0 + x, box.y0 + y) = 1;
  return r;
}

/// `denoised` is the median-filtered image. Equalization amplifies noise
/// inside the cytoplasm enough to pin the contour, so edges come from the
/// image before that step.
inline CellSegmentation segment_cell(const GrayImage& denoised, const BinaryMask& clump, const BinaryMask& nucleus,
                                     const PipelineConfig& cfg, int n_nuclei_in_clump) {
  if (n_nuclei_in_clump == 1) return segment_cell(ScalarField(clump.width(), clump.height(), 1.0), clump, nucleus, cfg, 1);
  return segment_cell(edge_indicator(denoised, cfg.drlse.sigma), clump, nucleus, cfg, n_nuclei_in_clump);
}

/// Full pipeline on one image. Nuclei are numbered by clump label, then by
/// raster order within the clump; cells follow the same order. Clumps with
/// no nucleus stay in the clump map but contribute no cells.
inline SegmentationResult run_pipeline(const GrayImage& image, const PipelineConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  SegmentationResult result;
  result.provenance.config = cfg;
  auto lap = [&, t = clock::now()](const char* stage) mutable {
    const auto now = clock::now();
    result.provenance.timings.push_back({stage, std::chrono::duration<double, std::milli>(now - t).count()});
    t = now;
  };

  auto clumps = segment_clumps(image, cfg);
  result.clumps = clumps.clumps;
  result.provenance.degenerate_scene = clumps.degenerate;
  result.nuclei = LabelMap(image.width(), image.height());
  lap("clumps");

  struct Pending {
    int clump;
    int n_in_clump;
    BinaryMask clump_mask;
    BinaryMask nucleus;
  };
  std::vector<Pending> pending;
  std::int32_t next = 0;
  for (int c = 1; c <= result.clumps.n_labels(); ++c) {
    auto clump_mask = result.clumps.mask_of(c);
    const auto nuc = segment_nuclei(clumps.preprocessed, clump_mask, cfg);
    for (int k = 1; k <= nuc.nuclei.n_labels(); ++k) {
      ++next;
      auto nm = nuc.nuclei.mask_of(k);
      for (std::size_t i = 0; i < nm.size(); ++i)
        if (nm[i]) result.nuclei[i] = next;
      result.nucleus_centroids.push_back(nuc.centroids[static_cast<std::size_t>(k - 1)]);
      pending.push_back({c, nuc.nuclei.n_labels(), clump_mask, std::move(nm)});
    }
  }
  result.nuclei.set_n_labels(next);
  lap("nuclei");

  const bool any_multi = std::any_of(pending.begin(), pending.end(), [](const Pending& p) { return p.n_in_clump > 1; });
  const auto edges = any_multi ? edge_indicator(clumps.denoised, cfg.drlse.sigma)
                               : ScalarField(image.width(), image.height(), 1.0);
  for (const auto& p : pending) {
    auto cell = segment_cell(edges, p.clump_mask, p.nucleus, cfg, p.n_in_clump);
    result.provenance.cells.push_back({p.clump, p.n_in_clump == 1, cell.iterations, cell.converged});
    result.cells.push_back(std::move(cell.cell));
  }
  lap("cells");
  return result;
}

/// Pipeline on a focal stack: planes are fused first.
inline SegmentationResult run_pipeline(const std::vector<GrayImage>& stack, const PipelineConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto fused = edf_fuse(stack, cfg.edf_window);
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  auto result = run_pipeline(fused, cfg);
  result.provenance.timings.insert(result.provenance.timings.begin(), {"edf", ms});
  return result;
}

}  // namespace cytoseg
