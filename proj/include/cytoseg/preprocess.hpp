#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cytoseg/raster.hpp"

namespace cytoseg {

inline ScalarField to_field(const GrayImage& image) {
  ScalarField f(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) f[i] = image[i];
  return f;
}

/// k x k median with edge replication. k must be odd and positive.
inline GrayImage median_filter(const GrayImage& image, int k) {
  detail::require(k >= 1 && k % 2 == 1, ErrorCode::invalid_argument, "median window must be odd and positive");
  GrayImage out(image.width(), image.height(), 0, image.l_max());
  const int r = k / 2;
  std::vector<std::uint16_t> window(static_cast<std::size_t>(k) * k);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      std::size_t n = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) window[n++] = image.clamped(x + dx, y + dy);
      std::nth_element(window.begin(), mid, window.end());
      out(x, y) = *mid;
    }
  }
  return out;
}

namespace detail {

// Tile edges along one axis: tile j spans [edges[j], edges[j+1]).
inline std::vector<int> tile_edges(int extent, int tiles) {
  std::vector<int> e(static_cast<std::size_t>(tiles) + 1);
  for (int j = 0; j <= tiles; ++j) {
    e[j] = static_cast<int>(static_cast<long long>(j) * extent / tiles);
  }
  return e;
}

// Interpolation anchor for coordinate c between tile centres.
struct Blend {
  int lo = 0;
  int hi = 0;
  double w = 0.0;  // weight of hi
};

inline Blend blend_at(double c, const std::vector<double>& centres) {
  const int last = static_cast<int>(centres.size()) - 1;
  if (c <= centres.front()) return {0, 0, 0.0};
  if (c >= centres.back()) return {last, last, 0.0};
  int j = 0;
  while (j + 1 < last && c >= centres[j + 1]) ++j;
  return {j, j + 1, (c - centres[j]) / (centres[j + 1] - centres[j])};
}

}  // namespace detail

/// Contrast-limited adaptive histogram equalization.
///
/// The image is split into tiles x tiles regions. Each region's histogram is
/// clipped at min_clip + round(clip * (n - min_clip)), where n is the region's
/// pixel count and min_clip = ceil(n / levels); the clipped excess is spread
/// evenly over all levels. The region lookup table is
/// round(l_max * cdf(v) / n). Pixels are remapped by bilinear interpolation of
/// the four nearest region tables (nearest-table extrapolation outside the
/// outermost region centres). clip = 1 disables clipping, so a single tile
/// with clip = 1 is plain global histogram equalization.
///
/// When an axis is shorter than the tile count, the tile count along that
/// axis is reduced to the axis length.
inline GrayImage adaptive_hist_eq(const GrayImage& image, int tiles, double clip) {
  detail::require(tiles >= 1, ErrorCode::invalid_argument, "tiles must be >= 1");
  detail::require(clip > 0.0 && clip <= 1.0, ErrorCode::invalid_argument, "clip must lie in (0, 1]");
  const int w = image.width();
  const int h = image.height();
  GrayImage out(w, h, 0, image.l_max());
  if (image.empty()) return out;

  const int tx = std::min(tiles, w);
  const int ty = std::min(tiles, h);
  const auto ex = detail::tile_edges(w, tx);
  const auto ey = detail::tile_edges(h, ty);
  const std::size_t levels = static_cast<std::size_t>(image.l_max()) + 1;
  const auto l_max = static_cast<std::uint64_t>(image.l_max());

  std::vector<std::vector<std::uint16_t>> luts(static_cast<std::size_t>(tx) * ty);
  std::vector<std::uint64_t> hist(levels);
  for (int j = 0; j < ty; ++j) {
    for (int i = 0; i < tx; ++i) {
      std::fill(hist.begin(), hist.end(), 0);
      for (int y = ey[j]; y < ey[j + 1]; ++y)
        for (int x = ex[i]; x < ex[i + 1]; ++x) ++hist[image(x, y)];
      const std::uint64_t n = static_cast<std::uint64_t>(ex[i + 1] - ex[i]) * (ey[j + 1] - ey[j]);

      const std::uint64_t min_clip = (n + levels - 1) / levels;
      const auto limit = min_clip + static_cast<std::uint64_t>(std::llround(clip * static_cast<double>(n - min_clip)));
      std::uint64_t excess = 0;
      for (auto& c : hist) {
        if (c > limit) {
          excess += c - limit;
          c = limit;
        }
      }
      const std::uint64_t share = excess / levels;
      const std::uint64_t rest = excess % levels;
      for (auto& c : hist) c += share;
      if (rest > 0) {
        const std::uint64_t step = levels / rest;
        for (std::uint64_t k = 0; k < rest; ++k) ++hist[k * step];
      }

      auto& lut = luts[static_cast<std::size_t>(j) * tx + i];
      lut.resize(levels);
      std::uint64_t cdf = 0;
      for (std::size_t v = 0; v < levels; ++v) {
        cdf += hist[v];
        lut[v] = static_cast<std::uint16_t>((2 * l_max * cdf + n) / (2 * n));
      }
    }
  }

  std::vector<double> cx(static_cast<std::size_t>(tx));
  std::vector<double> cy(static_cast<std::size_t>(ty));
  for (int i = 0; i < tx; ++i) cx[i] = 0.5 * (ex[i] + ex[i + 1] - 1);
  for (int j = 0; j < ty; ++j) cy[j] = 0.5 * (ey[j] + ey[j + 1] - 1);

  std::vector<detail::Blend> bx(static_cast<std::size_t>(w));
  for (int x = 0; x < w; ++x) bx[x] = detail::blend_at(x, cx);
  for (int y = 0; y < h; ++y) {
    const auto by = detail::blend_at(y, cy);
    for (int x = 0; x < w; ++x) {
      const auto v = image(x, y);
      const auto& b = bx[x];
      auto at = [&](int ti, int tj) { return static_cast<double>(luts[static_cast<std::size_t>(tj) * tx + ti][v]); };
      const double top = (1.0 - b.w) * at(b.lo, by.lo) + b.w * at(b.hi, by.lo);
      const double bottom = (1.0 - b.w) * at(b.lo, by.hi) + b.w * at(b.hi, by.hi);
      const double mixed = (1.0 - by.w) * top + by.w * bottom;
      out(x, y) = static_cast<std::uint16_t>(std::clamp<long>(std::lround(mixed), 0, image.l_max()));
    }
  }
  return out;
}

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  detail::require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::invalid_argument, "sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + r];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable Gaussian convolution with edge replication.
inline ScalarField gaussian_smooth(const ScalarField& field, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = field.width();
  const int h = field.height();
  ScalarField tmp(w, h);
  ScalarField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * field.clamped(x + i, y);
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(x, y + i);
      out(x, y) = acc;
    }
  }
  return out;
}

inline ScalarField gaussian_smooth(const GrayImage& image, double sigma) {
  return gaussian_smooth(to_field(image), sigma);
}

}  // namespace cytoseg
