#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "cytoseg/raster.hpp"

namespace cytoseg {

enum class Connectivity { four = 4, eight = 8 };

namespace detail {

struct Offset {
  int dx;
  int dy;
};

inline constexpr std::array<Offset, 8> kNeighbors8{{{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};
inline constexpr std::array<Offset, 4> kNeighbors4{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};
// Neighbours already visited by a raster scan, and by an anti-raster scan.
inline constexpr std::array<Offset, 4> kForward8{{{-1, -1}, {0, -1}, {1, -1}, {-1, 0}}};
inline constexpr std::array<Offset, 4> kBackward8{{{1, 1}, {0, 1}, {-1, 1}, {1, 0}}};

template <typename Fn>
void for_each_neighbor(int x, int y, int w, int h, Connectivity c, Fn&& fn) {
  auto visit = [&](const auto& offsets) {
    for (const auto& o : offsets) {
      const int nx = x + o.dx;
      const int ny = y + o.dy;
      if (nx >= 0 && ny >= 0 && nx < w && ny < h) fn(nx, ny);
    }
  };
  if (c == Connectivity::eight) {
    visit(kNeighbors8);
  } else {
    visit(kNeighbors4);
  }
}

}  // namespace detail

/// Grayscale reconstruction by dilation of marker under mask (8-connected),
/// run to an exact fixpoint with the raster / anti-raster / FIFO scheme.
inline GrayImage reconstruct_dilation(const GrayImage& marker, const GrayImage& mask) {
  require_same_shape(marker, mask, "marker and mask must have the same dimensions");
  for (std::size_t i = 0; i < marker.size(); ++i) {
    detail::require(marker[i] <= mask[i], ErrorCode::invalid_argument, "marker exceeds mask");
  }
  const int w = marker.width();
  const int h = marker.height();
  GrayImage out = marker;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto v = out(x, y);
      for (const auto& o : detail::kForward8) {
        const int nx = x + o.dx;
        const int ny = y + o.dy;
        if (out.contains(nx, ny)) v = std::max(v, out(nx, ny));
      }
      out(x, y) = std::min(v, mask(x, y));
    }
  }

  std::deque<std::pair<int, int>> fifo;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      auto v = out(x, y);
      for (const auto& o : detail::kBackward8) {
        const int nx = x + o.dx;
        const int ny = y + o.dy;
        if (out.contains(nx, ny)) v = std::max(v, out(nx, ny));
      }
      v = std::min(v, mask(x, y));
      out(x, y) = v;
      for (const auto& o : detail::kBackward8) {
        const int nx = x + o.dx;
        const int ny = y + o.dy;
        if (out.contains(nx, ny) && out(nx, ny) < v && out(nx, ny) < mask(nx, ny)) {
          fifo.emplace_back(x, y);
          break;
        }
      }
    }
  }

  while (!fifo.empty()) {
    const auto [x, y] = fifo.front();
    fifo.pop_front();
    const auto v = out(x, y);
    detail::for_each_neighbor(x, y, w, h, Connectivity::eight, [&](int nx, int ny) {
      const auto q = out(nx, ny);
      const auto lim = mask(nx, ny);
      if (q < v && q != lim) {
        out(nx, ny) = std::min(v, lim);
        fifo.emplace_back(nx, ny);
      }
    });
  }
  return out;
}

/// Levels every regional maximum whose prominence is at most h:
/// reconstruct_dilation(max(image - h, 0), image).
inline GrayImage h_maxima_suppress(const GrayImage& image, int h) {
  detail::require(h >= 1, ErrorCode::invalid_argument, "h must be >= 1");
  GrayImage marker(image.width(), image.height(), 0, image.l_max());
  for (std::size_t i = 0; i < image.size(); ++i) {
    marker[i] = static_cast<std::uint16_t>(std::max(0, static_cast<int>(image[i]) - h));
  }
  return reconstruct_dilation(marker, image);
}

namespace detail {

// Marks 8-connected constant plateaus whose outside neighbours are all
// strictly higher (minima) or all strictly lower (maxima).
template <typename Cmp>
BinaryMask regional_extrema(const GrayImage& image, Cmp beyond) {
  const int w = image.width();
  const int h = image.height();
  BinaryMask out(w, h);
  std::vector<std::uint8_t> seen(image.size(), 0);
  std::vector<std::pair<int, int>> plateau;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (seen[image.index(x, y)]) continue;
      const auto level = image(x, y);
      bool extremal = true;
      plateau.clear();
      stack.assign(1, {x, y});
      seen[image.index(x, y)] = 1;
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        plateau.emplace_back(px, py);
        for_each_neighbor(px, py, w, h, Connectivity::eight, [&](int nx, int ny) {
          const auto v = image(nx, ny);
          if (v == level) {
            auto& s = seen[image.index(nx, ny)];
            if (!s) {
              s = 1;
              stack.emplace_back(nx, ny);
            }
          } else if (!beyond(v, level)) {
            extremal = false;
          }
        });
      }
      if (extremal) {
        for (const auto& [px, py] : plateau) out(px, py) = 1;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Union of 8-connected constant plateaus whose every outside neighbour is
/// strictly brighter. A constant image is one plateau with no outside
/// neighbours, so it is entirely foreground.
inline BinaryMask regional_minima(const GrayImage& image) {
  return detail::regional_extrema(image, [](auto v, auto level) { return v > level; });
}

/// Dual of regional_minima: plateaus whose outside neighbours are all darker.
inline BinaryMask regional_maxima(const GrayImage& image) {
  return detail::regional_extrema(image, [](auto v, auto level) { return v < level; });
}

/// Labels foreground components 1..n in order of first encounter in a
/// raster scan.
inline LabelMap connected_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::eight) {
  const int w = mask.width();
  const int h = mask.height();
  LabelMap labels(w, h);
  std::int32_t next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y) || labels(x, y) != 0) continue;
      ++next;
      labels(x, y) = next;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        detail::for_each_neighbor(px, py, w, h, connectivity, [&](int nx, int ny) {
          if (mask(nx, ny) && labels(nx, ny) == 0) {
            labels(nx, ny) = next;
            stack.emplace_back(nx, ny);
          }
        });
      }
    }
  }
  labels.set_n_labels(next);
  return labels;
}

/// Drops components with area < min_area and renumbers the survivors
/// contiguously in raster order of first encounter.
inline LabelMap remove_small_components(const LabelMap& labels, std::size_t min_area) {
  std::int32_t max_label = 0;
  for (auto v : labels.data()) max_label = std::max(max_label, v);
  std::vector<std::size_t> area(static_cast<std::size_t>(max_label) + 1, 0);
  for (auto v : labels.data()) ++area[static_cast<std::size_t>(v)];

  std::vector<std::int32_t> remap(area.size(), -1);
  remap[0] = 0;
  std::int32_t next = 0;
  LabelMap out(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto v = static_cast<std::size_t>(labels[i]);
    if (v == 0) continue;
    if (remap[v] < 0) remap[v] = area[v] >= min_area ? ++next : 0;
    out[i] = remap[v];
  }
  out.set_n_labels(next);
  return out;
}

/// Fills background regions not 4-connected to the image border.
inline BinaryMask fill_holes(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask outside(w, h);
  if (mask.empty()) return outside;
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int x, int y) {
    if (!mask(x, y) && !outside(x, y)) {
      outside(x, y) = 1;
      stack.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const auto [px, py] = stack.back();
    stack.pop_back();
    detail::for_each_neighbor(px, py, w, h, Connectivity::four, [&](int nx, int ny) { seed(nx, ny); });
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = outside[i] ? 0 : 1;
  return out;
}

/// Binary dilation by the disc {dx^2 + dy^2 <= radius^2}.
inline BinaryMask dilate_disc(const BinaryMask& mask, int radius) {
  detail::require(radius >= 0, ErrorCode::invalid_argument, "radius must be non-negative");
  std::vector<detail::Offset> disc;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) disc.push_back({dx, dy});
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      for (const auto& o : disc) {
        if (out.contains(x + o.dx, y + o.dy)) out(x + o.dx, y + o.dy) = 1;
      }
    }
  }
  return out;
}

/// Foreground pixels with at least one 4-neighbour outside the mask (or on
/// the image border).
inline BinaryMask boundary(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      bool edge = false;
      for (const auto& o : detail::kNeighbors4) {
        const int nx = x + o.dx;
        const int ny = y + o.dy;
        if (!mask.contains(nx, ny) || !mask(nx, ny)) edge = true;
      }
      out(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

}  // namespace cytoseg
