#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cytoseg/error.hpp"

namespace cytoseg {

/// Row-major 2-D grid. All raster types in the library are thin wrappers
/// around this so that size checks and indexing live in one place.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    detail::require(width >= 0 && height >= 0, ErrorCode::invalid_argument,
                    "raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    detail::require(width >= 0 && height >= 0 &&
                        data_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                    ErrorCode::dimension_mismatch, "data length must equal width x height");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  // Edge-replicated access.
  const T& clamped(int x, int y) const {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  detail::require(a.same_shape(b), ErrorCode::dimension_mismatch, what);
}

/// Integer intensities in [0, l_max].
class GrayImage : public Raster<std::uint16_t> {
 public:
  static constexpr int kDefaultLMax = 255;

  GrayImage() = default;
  GrayImage(int width, int height, std::uint16_t fill = 0, int l_max = kDefaultLMax)
      : Raster(width, height, fill), l_max_(l_max) {
    check_levels();
  }
  GrayImage(int width, int height, std::vector<std::uint16_t> data, int l_max = kDefaultLMax)
      : Raster(width, height, std::move(data)), l_max_(l_max) {
    check_levels();
  }

  int l_max() const noexcept { return l_max_; }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.l_max_ == b.l_max_ &&
           static_cast<const Raster<std::uint16_t>&>(a) == static_cast<const Raster<std::uint16_t>&>(b);
  }

 private:
  void check_levels() const {
    detail::require(l_max_ >= 1 && l_max_ <= 65535, ErrorCode::invalid_argument, "l_max out of range");
    detail::require(std::all_of(data().begin(), data().end(),
                                [&](std::uint16_t v) { return v <= l_max_; }),
                    ErrorCode::invalid_argument, "intensity exceeds l_max");
  }

  int l_max_ = kDefaultLMax;
};

/// Boolean mask stored as 0/1 bytes.
using BinaryMask = Raster<std::uint8_t>;

/// Real-valued field used for smoothing and gradients.
using ScalarField = Raster<double>;

/// Connected-component labels: 0 is background, positives are 1..n_labels.
class LabelMap : public Raster<std::int32_t> {
 public:
  LabelMap() = default;
  LabelMap(int width, int height) : Raster(width, height, 0) {}
  LabelMap(int width, int height, std::vector<std::int32_t> data, int n_labels)
      : Raster(width, height, std::move(data)), n_labels_(n_labels) {}

  int n_labels() const noexcept { return n_labels_; }
  void set_n_labels(int n) noexcept { n_labels_ = n; }

  BinaryMask mask_of(std::int32_t label) const {
    BinaryMask m(width(), height());
    for (std::size_t i = 0; i < size(); ++i) m[i] = (*this)[i] == label ? 1 : 0;
    return m;
  }

  BinaryMask foreground() const {
    BinaryMask m(width(), height());
    for (std::size_t i = 0; i < size(); ++i) m[i] = (*this)[i] > 0 ? 1 : 0;
    return m;
  }

  std::vector<std::size_t> areas() const {
    std::vector<std::size_t> a(static_cast<std::size_t>(n_labels_) + 1, 0);
    for (auto v : data()) ++a[static_cast<std::size_t>(v)];
    return a;
  }

 private:
  int n_labels_ = 0;
};

inline std::size_t count(const BinaryMask& m) {
  return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

/// Per-level pixel counts for levels 0..l_max.
struct Histogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  int l_max() const noexcept { return static_cast<int>(counts.size()) - 1; }
};

/// Per-level probabilities; sums to one.
struct ProbDist {
  std::vector<double> probs;

  int l_max() const noexcept { return static_cast<int>(probs.size()) - 1; }
  double operator[](std::size_t i) const { return probs[i]; }
};

inline Histogram compute_histogram(const GrayImage& image, const std::optional<BinaryMask>& roi = std::nullopt) {
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(image.l_max()) + 1, 0);
  if (roi) {
    require_same_shape(image, *roi, "roi must match image dimensions");
    for (std::size_t i = 0; i < image.size(); ++i) {
      if ((*roi)[i]) ++h.counts[image[i]];
    }
  } else {
    for (auto v : image.data()) ++h.counts[v];
  }
  h.total = std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0});
  detail::require(h.total > 0, roi ? ErrorCode::empty_roi : ErrorCode::invalid_argument,
                  roi ? "roi has no foreground pixels" : "image has no pixels");
  return h;
}

inline ProbDist normalize(const Histogram& hist) {
  detail::require(hist.total > 0, ErrorCode::invalid_argument, "histogram total is zero");
  ProbDist p;
  p.probs.resize(hist.counts.size());
  const double total = static_cast<double>(hist.total);
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    p.probs[i] = static_cast<double>(hist.counts[i]) / total;
  }
  return p;
}

}  // namespace cytoseg
