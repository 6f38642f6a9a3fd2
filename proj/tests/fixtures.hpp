#pragma once

// Shared scenes and measurements for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>

#include "cytoseg/levelset.hpp"
#include "cytoseg/morphology.hpp"

namespace fixture {

using namespace cytoseg;

// 128 x 128, disc of radius 60 at 50 on a 200 background, seed disc of
// radius 10, both centred at (63.5, 63.5).
struct DiscScene {
  GrayImage image;
  BinaryMask truth;
  BinaryMask seed;
};

inline DiscScene dark_disc() {
  const int n = 128;
  DiscScene s{GrayImage(n, n, 200), BinaryMask(n, n), BinaryMask(n, n)};
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double d = std::hypot(x - 63.5, y - 63.5);
      if (d <= 60.0) {
        s.image(x, y) = 50;
        s.truth(x, y) = 1;
      }
      if (d <= 10.0) s.seed(x, y) = 1;
    }
  }
  return s;
}

// Symmetric Hausdorff distance between the 4-boundaries of two masks.
inline double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  const auto ba = boundary(a);
  const auto bb = boundary(b);
  auto directed = [](const BinaryMask& from, const BinaryMask& to) {
    double worst = 0.0;
    for (int y = 0; y < from.height(); ++y) {
      for (int x = 0; x < from.width(); ++x) {
        if (!from(x, y)) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int v = 0; v < to.height(); ++v)
          for (int u = 0; u < to.width(); ++u)
            if (to(u, v)) best = std::min(best, std::hypot(u - x, v - y));
        worst = std::max(worst, best);
      }
    }
    return worst;
  };
  return std::max(directed(ba, bb), directed(bb, ba));
}

// Mean of | |grad phi| - 1 | over interior pixels with |phi| < band,
// central differences.
inline double band_deviation(const Raster<double>& phi, double band) {
  double acc = 0.0;
  std::size_t n = 0;
  for (int y = 1; y + 1 < phi.height(); ++y) {
    for (int x = 1; x + 1 < phi.width(); ++x) {
      if (std::abs(phi(x, y)) >= band) continue;
      const double gx = 0.5 * (phi(x + 1, y) - phi(x - 1, y));
      const double gy = 0.5 * (phi(x, y + 1) - phi(x, y - 1));
      acc += std::abs(std::hypot(gx, gy) - 1.0);
      ++n;
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace fixture
