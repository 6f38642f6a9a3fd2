#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cytoseg/raster.hpp"

// Synthetic overlapping-cell specimens with exact ground truth.
//
// Reproducibility: all placement arithmetic is integer (rotations come from
// a fixed table of cos/sin scaled by 4096). Floating point is limited to
// basic IEEE operations (overlap attenuation, and noise built from sums of
// SplitMix64 uniforms), so equal specs give bit-identical output on every
// platform.

namespace cytoseg {

/// SplitMix64 (Steele, Lea & Flood). next() returns the standard mix of a
/// state advanced by 0x9E3779B97F4A7C15.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi] (modulo reduction).
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Approximately standard normal: sum of twelve uniforms minus six
  /// (Irwin-Hall). Uses only IEEE additions, so it is bit-reproducible.
  double normal() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

 private:
  std::uint64_t state_;
};

struct PhantomSpec {
  int width = 512;
  int height = 512;
  int n_cells = 3;
  double overlap_level = 0.3;
  int cytoplasm_level = 150;
  int nucleus_level = 60;
  int background_level = 220;
  double noise_sigma = 4.0;
  std::uint64_t seed = 42;

  void validate() const {
    using detail::require;
    require(n_cells >= 1, ErrorCode::invalid_argument, "n_cells must be >= 1");
    require(width >= 64 && height >= 64, ErrorCode::invalid_argument, "phantom must be at least 64x64");
    require(overlap_level >= 0.0 && overlap_level <= 1.0, ErrorCode::invalid_argument,
            "overlap_level must lie in [0, 1]");
    require(0 <= nucleus_level && nucleus_level < cytoplasm_level && cytoplasm_level < background_level &&
                background_level <= GrayImage::kDefaultLMax,
            ErrorCode::invalid_argument, "levels must satisfy 0 <= nucleus < cytoplasm < background <= 255");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorCode::invalid_argument,
            "noise_sigma must be non-negative");
  }
};

struct Phantom {
  GrayImage image;
  std::vector<BinaryMask> cells;
  std::vector<BinaryMask> nuclei;
};

/// Intensity multiplier applied once per additional covering cell.
inline constexpr int kOverlapAttenuationPercent = 85;

namespace detail {

// cos and sin of k * 15 degrees, scaled by 4096 and rounded.
inline constexpr std::array<std::array<int, 2>, 24> kRotations{{
    {4096, 0},     {3956, 1060},   {3547, 2048},   {2896, 2896},   {2048, 3547},   {1060, 3956},
    {0, 4096},     {-1060, 3956},  {-2048, 3547},  {-2896, 2896},  {-3547, 2048},  {-3956, 1060},
    {-4096, 0},    {-3956, -1060}, {-3547, -2048}, {-2896, -2896}, {-2048, -3547}, {-1060, -3956},
    {0, -4096},    {1060, -3956},  {2048, -3547},  {2896, -2896},  {3547, -2048},  {3956, -1060},
}};

struct Ellipse {
  int cx = 0;
  int cy = 0;
  int a = 1;  // semi-axis along the rotated x direction
  int b = 1;
  int rot = 0;  // index into kRotations

  bool contains(int x, int y) const {
    const auto c = static_cast<std::int64_t>(kRotations[rot][0]);
    const auto s = static_cast<std::int64_t>(kRotations[rot][1]);
    const std::int64_t dx = x - cx;
    const std::int64_t dy = y - cy;
    const std::int64_t u = dx * c + dy * s;
    const std::int64_t v = -dx * s + dy * c;
    const std::int64_t aa = static_cast<std::int64_t>(a) * a;
    const std::int64_t bb = static_cast<std::int64_t>(b) * b;
    // u^2/a^2 + v^2/b^2 <= 4096^2, kept in 128-bit to stay exact.
    const __int128 lhs = static_cast<__int128>(u) * u * bb + static_cast<__int128>(v) * v * aa;
    const __int128 rhs = static_cast<__int128>(aa) * bb * 4096 * 4096;
    return lhs <= rhs;
  }

  int reach() const { return a > b ? a : b; }

  BinaryMask raster(int w, int h) const {
    BinaryMask m(w, h);
    const int r = reach();
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) m(x, y) = contains(x, y) ? 1 : 0;
    return m;
  }
};

inline std::int64_t isqrt(std::int64_t n) {
  std::int64_t r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline std::int64_t round_div(std::int64_t num, std::int64_t den) {
  return num >= 0 ? (num + den / 2) / den : -((-num + den / 2) / den);
}

}  // namespace detail

/// Draws n_cells rotated elliptical cells (semi-axes 40..90 px) with centre
/// spacing (1 - overlap_level) * (r_i + r_j), r the mean semi-axis. Cytoplasm
/// covered by k cells has intensity cytoplasm_level * 0.85^(k-1). Each cell
/// gets one elliptical nucleus covering 3-8% of its area, placed where no
/// other cell reaches (6 px clearance) so nuclei are pairwise disjoint.
/// Throws ErrorCode::placement_failed when no layout is found within the
/// retry budget.
inline Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  using detail::Ellipse;
  SplitMix64 rng(spec.seed);
  const int w = spec.width;
  const int h = spec.height;
  constexpr int kMargin = 4;
  constexpr int kNucleusClearance = 6;
  constexpr int kLayoutAttempts = 200;
  constexpr int kNucleusAttempts = 50;

  auto mean_radius = [](const Ellipse& e) { return (e.a + e.b) / 2; };
  // Spacing in whole pixels from an integer percentage of overlap.
  const auto overlap_pct = static_cast<std::int64_t>(std::llround(spec.overlap_level * 100.0));
  auto spacing = [&](const Ellipse& p, const Ellipse& q) {
    return static_cast<std::int64_t>(mean_radius(p) + mean_radius(q)) * (100 - overlap_pct) / 100;
  };

  for (int attempt = 0; attempt < kLayoutAttempts; ++attempt) {
    std::vector<Ellipse> cells;
    bool ok = true;
    for (int k = 0; k < spec.n_cells && ok; ++k) {
      Ellipse e;
      e.a = rng.uniform_int(40, 90);
      e.b = rng.uniform_int(40, 90);
      e.rot = rng.uniform_int(0, 11);
      if (k == 0) {
        e.cx = w / 2 + rng.uniform_int(-w / 16, w / 16);
        e.cy = h / 2 + rng.uniform_int(-h / 16, h / 16);
      } else {
        const auto& anchor = cells[static_cast<std::size_t>(rng.uniform_int(0, k - 1))];
        const auto& dir = detail::kRotations[static_cast<std::size_t>(rng.uniform_int(0, 23))];
        const auto d = spacing(anchor, e);
        e.cx = anchor.cx + static_cast<int>(detail::round_div(d * dir[0], 4096));
        e.cy = anchor.cy + static_cast<int>(detail::round_div(d * dir[1], 4096));
      }
      const int r = e.reach();
      if (e.cx - r < kMargin || e.cy - r < kMargin || e.cx + r > w - 1 - kMargin || e.cy + r > h - 1 - kMargin) {
        ok = false;
        break;
      }
      for (const auto& other : cells) {
        const std::int64_t dx = e.cx - other.cx;
        const std::int64_t dy = e.cy - other.cy;
        if (detail::isqrt(dx * dx + dy * dy) < spacing(other, e)) ok = false;
      }
      cells.push_back(e);
    }
    if (!ok) continue;

    std::vector<BinaryMask> cell_masks;
    cell_masks.reserve(cells.size());
    for (const auto& e : cells) cell_masks.push_back(e.raster(w, h));

    // Pixels within kNucleusClearance of each cell, used to keep nuclei
    // clear of the other cells.
    std::vector<BinaryMask> reach_masks;
    for (const auto& e : cells) {
      Ellipse grown = e;
      grown.a += kNucleusClearance;
      grown.b += kNucleusClearance;
      reach_masks.push_back(grown.raster(w, h));
    }

    std::vector<BinaryMask> nucleus_masks;
    BinaryMask taken(w, h);
    for (std::size_t k = 0; k < cells.size() && ok; ++k) {
      const auto& cell = cells[k];
      bool placed = false;
      for (int tries = 0; tries < kNucleusAttempts && !placed; ++tries) {
        const int permille = rng.uniform_int(30, 80);
        Ellipse n;
        n.rot = cell.rot;
        // Axis scale sqrt(permille / 1000) in millionths.
        const auto scale = detail::isqrt(static_cast<std::int64_t>(permille) * 1'000'000'000LL);
        n.a = std::max(3, static_cast<int>(detail::round_div(cell.a * scale, 1'000'000)));
        n.b = std::max(3, static_cast<int>(detail::round_div(cell.b * scale, 1'000'000)));
        const int u = rng.uniform_int(-cell.a / 2, cell.a / 2);
        const int v = rng.uniform_int(-cell.b / 2, cell.b / 2);
        const auto& rot = detail::kRotations[static_cast<std::size_t>(cell.rot)];
        n.cx = cell.cx + static_cast<int>(detail::round_div(static_cast<std::int64_t>(u) * rot[0] - static_cast<std::int64_t>(v) * rot[1], 4096));
        n.cy = cell.cy + static_cast<int>(detail::round_div(static_cast<std::int64_t>(u) * rot[1] + static_cast<std::int64_t>(v) * rot[0], 4096));
        auto mask = n.raster(w, h);
        bool fits = count(mask) > 0;
        for (std::size_t i = 0; i < mask.size() && fits; ++i) {
          if (!mask[i]) continue;
          if (!cell_masks[k][i] || taken[i]) fits = false;
          for (std::size_t j = 0; j < cells.size() && fits; ++j) {
            if (j != k && reach_masks[j][i]) fits = false;
          }
        }
        if (!fits) continue;
        // Keep the nucleus at least one pixel inside its own cell outline.
        const auto& own = cell_masks[k];
        auto inside = [&](int x, int y) { return own.contains(x, y) && own(x, y); };
        for (int y = 0; y < h && fits; ++y)
          for (int x = 0; x < w && fits; ++x)
            if (mask(x, y) && !(inside(x - 1, y) && inside(x + 1, y) && inside(x, y - 1) && inside(x, y + 1)))
              fits = false;
        if (!fits) continue;
        for (std::size_t i = 0; i < mask.size(); ++i)
          if (mask[i]) taken[i] = 1;
        nucleus_masks.push_back(std::move(mask));
        placed = true;
      }
      if (!placed) ok = false;
    }
    if (!ok) continue;

    // Attenuated cytoplasm level for each coverage depth.
    std::vector<int> level_for(cells.size() + 1, spec.background_level);
    double level = spec.cytoplasm_level;
    for (std::size_t k = 1; k <= cells.size(); ++k) {
      level_for[k] = static_cast<int>(std::lround(level));
      level *= kOverlapAttenuationPercent / 100.0;
    }

    GrayImage image(w, h, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = image.index(x, y);
        std::size_t cover = 0;
        for (const auto& m : cell_masks) cover += m[i] ? 1 : 0;
        int v = level_for[cover];
        if (taken[i]) v = spec.nucleus_level;
        if (spec.noise_sigma > 0.0) {
          const double noisy = static_cast<double>(v) + spec.noise_sigma * rng.normal();
          v = static_cast<int>(std::clamp<long>(std::lround(noisy), 0, image.l_max()));
        }
        image[i] = static_cast<std::uint16_t>(v);
      }
    }
    return {std::move(image), std::move(cell_masks), std::move(nucleus_masks)};
  }
  throw Error(ErrorCode::placement_failed, "could not place cells and disjoint nuclei within the retry budget");
}

}  // namespace cytoseg
