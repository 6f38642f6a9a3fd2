#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "cytoseg/raster.hpp"

// Otsu thresholding and its prior-weighted variant for small dark classes.
//
// Intensities are 0-based: a threshold t splits levels into the dark class
// {0..t} and the bright class {t+1..l_max}.

namespace cytoseg {

struct ThresholdResult {
  int t = 0;
  double objective = 0.0;  // within-class variance at t
};

/// Prior probability of the dark (object) class.
class NucleusPrior {
 public:
  explicit NucleusPrior(double alpha) : alpha_(alpha) {
    detail::require(alpha > 0.0 && alpha < 1.0 && std::isfinite(alpha), ErrorCode::invalid_argument,
                    "nucleus prior must lie in (0, 1)");
  }
  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
};

/// w1 * var1 + w2 * var2 for the split at t, each class variance taken
/// about its own mean under p restricted to the class.
inline double within_class_variance(const ProbDist& p, int t) {
  const int l_max = p.l_max();
  detail::require(t >= 0 && t < l_max, ErrorCode::invalid_argument, "threshold out of range");
  auto class_stats = [&](int lo, int hi) {
    double w = 0.0;
    double m = 0.0;
    for (int i = lo; i <= hi; ++i) {
      w += p[i];
      m += i * p[i];
    }
    detail::require(w > 0.0, ErrorCode::empty_class, "class at threshold " + std::to_string(t) + " is empty");
    const double mean = m / w;
    double var = 0.0;
    for (int i = lo; i <= hi; ++i) var += p[i] * (i - mean) * (i - mean);
    return var;  // already weighted: w * (var / w)
  };
  return class_stats(0, t) + class_stats(t + 1, l_max);
}

/// Threshold minimizing within-class variance over every t that leaves
/// both classes non-empty; ties go to the smallest t.
inline ThresholdResult otsu(const ProbDist& p) {
  const int l_max = p.l_max();
  detail::require(l_max >= 1, ErrorCode::degenerate_distribution, "distribution needs at least two levels");
  double total_w = 0.0;
  double total_m = 0.0;
  double total_s = 0.0;
  for (int i = 0; i <= l_max; ++i) {
    total_w += p[i];
    total_m += i * p[i];
    total_s += static_cast<double>(i) * i * p[i];
  }
  int first = -1;
  int last = -1;
  for (int i = 0; i <= l_max; ++i) {
    if (p[i] > 0.0) {
      if (first < 0) first = i;
      last = i;
    }
  }
  detail::require(first >= 0 && first < last, ErrorCode::degenerate_distribution,
                  "distribution has fewer than two occupied levels");
  double w1 = 0.0;
  double m1 = 0.0;
  double s1 = 0.0;
  std::optional<int> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int t = 0; t < last; ++t) {
    w1 += p[t];
    m1 += t * p[t];
    s1 += static_cast<double>(t) * t * p[t];
    if (t < first) continue;
    const double w2 = total_w - w1;
    const double m2 = total_m - m1;
    const double s2 = total_s - s1;
    const double obj = (s1 - m1 * m1 / w1) + (s2 - m2 * m2 / w2);
    if (obj < best_obj) {
      best_obj = obj;
      best = t;
    }
  }
  detail::require(best.has_value(), ErrorCode::degenerate_distribution,
                  "distribution has fewer than two occupied levels");
  return {*best, within_class_variance(p, *best)};
}

/// Reweights p by the dark-class prior alpha. The cut l is the largest level
/// with sum_{i<=l} p(i) < alpha; levels 0..l are scaled by (1 - alpha), the
/// rest by alpha, and the result is renormalized. If p(0) >= alpha there is
/// no cut and p is returned unchanged in distribution.
inline ProbDist reweight_distribution(const ProbDist& p, const NucleusPrior& prior) {
  const double alpha = prior.alpha();
  const int l_max = p.l_max();
  int cut = -1;
  double acc = 0.0;
  for (int i = 0; i <= l_max; ++i) {
    acc += p[i];
    if (acc < alpha) {
      cut = i;
    } else {
      break;
    }
  }
  ProbDist out;
  out.probs.resize(p.probs.size());
  double sum = 0.0;
  for (int i = 0; i <= l_max; ++i) {
    out.probs[i] = p[i] * (i <= cut ? 1.0 - alpha : alpha);
    sum += out.probs[i];
  }
  detail::require(sum > 0.0, ErrorCode::degenerate_distribution, "distribution has no mass");
  for (auto& v : out.probs) v /= sum;
  return out;
}

/// Otsu on the prior-reweighted distribution; the objective is reported on
/// the reweighted distribution.
inline ThresholdResult modified_otsu(const ProbDist& p, const NucleusPrior& prior) {
  return otsu(reweight_distribution(p, prior));
}

/// Dark class is the object: foreground = intensity <= t (inside roi).
inline BinaryMask apply_threshold(const GrayImage& image, int t, const std::optional<BinaryMask>& roi = std::nullopt) {
  if (roi) require_same_shape(image, *roi, "roi must match image dimensions");
  BinaryMask out(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    out[i] = (image[i] <= t && (!roi || (*roi)[i])) ? 1 : 0;
  }
  return out;
}

}  // namespace cytoseg
