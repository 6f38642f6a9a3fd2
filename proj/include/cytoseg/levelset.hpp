#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "cytoseg/preprocess.hpp"
#include "cytoseg/raster.hpp"

// Distance-regularized level-set evolution (double-well potential, edge
// stopping, balloon force). The interior of the contour is {phi < 0}.
//
// Discretization. phi and g are extended past the image by even reflection
// about the border pixel (index -1 mirrors 1), which realizes a zero normal
// derivative. Gradients are central differences; divergences are central
// differences of the flux evaluated on the same reflected extension; the
// Laplacian is the 5-point stencil. The regularizer is evaluated as
// div((d_p(|grad phi|) - 1) grad phi) + laplacian(phi), which is
// div(d_p grad phi) with the isotropic part on the compact stencil.

namespace cytoseg {

class LevelSetField : public Raster<double> {
 public:
  using Raster::Raster;
};

struct DrlseParams {
  double mu = 0.04;        // distance-regularization weight
  double lambda = 5.0;     // weighted-length weight
  double balloon = -1.5;   // weighted-area weight; negative expands
  double epsilon = 1.5;    // smoothed delta half-width
  double dt = 5.0;
  double c0 = 2.0;         // binary step height
  double sigma = 1.5;      // edge-indicator smoothing
  int max_iters = 600;
  int check_every = 10;
  double converge_frac = 0.001;

  void validate() const {
    using detail::require;
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "dt must be positive");
    require(mu >= 0.0 && mu * dt < 0.25, ErrorCode::stability_violation, "mu * dt must be below 0.25");
    require(epsilon > 0.0, ErrorCode::invalid_argument, "epsilon must be positive");
    require(c0 > 0.0, ErrorCode::invalid_argument, "c0 must be positive");
    require(sigma > 0.0, ErrorCode::invalid_argument, "sigma must be positive");
    require(std::isfinite(lambda) && std::isfinite(balloon), ErrorCode::invalid_argument,
            "lambda and balloon must be finite");
    require(max_iters >= 0, ErrorCode::invalid_argument, "max_iters must be non-negative");
    require(check_every >= 1, ErrorCode::invalid_argument, "check_every must be >= 1");
    require(converge_frac >= 0.0 && converge_frac <= 1.0, ErrorCode::invalid_argument,
            "converge_frac must lie in [0, 1]");
  }
};

/// Edge indicator g = 1 / (1 + |grad(G_sigma * I)|^2), gradients by central
/// differences on raw intensities with a zero normal derivative at the
/// border. g is 1 on flat regions and small on edges.
inline ScalarField edge_indicator(const GrayImage& image, double sigma) {
  const auto smooth = gaussian_smooth(image, sigma);
  const int w = image.width();
  const int h = image.height();
  ScalarField g(w, h);
  auto reflect = [](int i, int n) { return n == 1 ? 0 : (i < 0 ? -i : (i >= n ? 2 * (n - 1) - i : i)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (smooth(reflect(x + 1, w), y) - smooth(reflect(x - 1, w), y));
      const double gy = 0.5 * (smooth(x, reflect(y + 1, h)) - smooth(x, reflect(y - 1, h)));
      g(x, y) = 1.0 / (1.0 + gx * gx + gy * gy);
    }
  }
  return g;
}

/// Binary step: -c0 on the seed, +c0 elsewhere.
inline LevelSetField init_phi(int width, int height, const BinaryMask& seed, double c0) {
  detail::require(seed.width() == width && seed.height() == height, ErrorCode::dimension_mismatch,
                  "seed must match the field dimensions");
  detail::require(count(seed) > 0, ErrorCode::empty_seed, "seed mask is empty");
  LevelSetField phi(width, height);
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = seed[i] ? -c0 : c0;
  return phi;
}

inline BinaryMask zero_sublevel_mask(const Raster<double>& phi) {
  BinaryMask m(phi.width(), phi.height());
  for (std::size_t i = 0; i < phi.size(); ++i) m[i] = phi[i] < 0.0 ? 1 : 0;
  return m;
}

namespace detail {

// d_p(s) = p'(s) / s for the double-well potential.
inline double double_well_ratio(double s) {
  if (s == 0.0) return 1.0;
  if (s <= 1.0) return std::sin(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi * s);
  return (s - 1.0) / s;
}

inline double smoothed_delta(double x, double eps) {
  if (std::abs(x) > eps) return 0.0;
  return (1.0 / (2.0 * eps)) * (1.0 + std::cos(std::numbers::pi * x / eps));
}

inline constexpr double kGradEps = 1e-10;

// Field padded by `margin` pixels of even reflection.
class Padded {
 public:
  Padded(const Raster<double>& src, int margin)
      : w_(src.width() + 2 * margin), h_(src.height() + 2 * margin), m_(margin),
        v_(static_cast<std::size_t>(w_) * h_) {
    const int sw = src.width();
    const int sh = src.height();
    auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * (n - 1) - i : i); };
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) v_[idx(x, y)] = src(reflect(x - m_, sw), reflect(y - m_, sh));
  }
  Padded(int w, int h, int margin) : w_(w), h_(h), m_(margin), v_(static_cast<std::size_t>(w) * h, 0.0) {}

  // Coordinates are in source space; valid for -margin..size+margin-1.
  double operator()(int x, int y) const { return v_[idx(x + m_, y + m_)]; }
  double& at(int x, int y) { return v_[idx(x + m_, y + m_)]; }

 private:
  std::size_t idx(int px, int py) const { return static_cast<std::size_t>(py) * w_ + px; }
  int w_;
  int h_;
  int m_;
  std::vector<double> v_;
};

}  // namespace detail

/// One explicit DRLSE update:
///   phi += dt * (mu * div(d_p(|grad phi|) grad phi)
///                + lambda * delta_eps(phi) * div(g grad phi / |grad phi|)
///                + balloon * g * delta_eps(phi))
/// Where `forbidden` is set, phi is clamped to +c0 afterwards.
inline LevelSetField drlse_step(const LevelSetField& phi, const ScalarField& g, const DrlseParams& params,
                                const std::optional<BinaryMask>& forbidden = std::nullopt) {
  params.validate();
  require_same_shape(phi, g, "phi and g must have the same dimensions");
  if (forbidden) require_same_shape(phi, *forbidden, "forbidden mask must match phi");
  const int w = phi.width();
  const int h = phi.height();
  detail::require(w >= 3 && h >= 3, ErrorCode::invalid_argument, "level-set domain must be at least 3x3");

  const detail::Padded p(phi, 2);
  const detail::Padded gp(g, 1);

  // Fluxes on the one-pixel ring around the domain as well as inside it.
  detail::Padded reg_x(w + 2, h + 2, 1), reg_y(w + 2, h + 2, 1);
  detail::Padded edge_x(w + 2, h + 2, 1), edge_y(w + 2, h + 2, 1);
  for (int y = -1; y <= h; ++y) {
    for (int x = -1; x <= w; ++x) {
      const double px = 0.5 * (p(x + 1, y) - p(x - 1, y));
      const double py = 0.5 * (p(x, y + 1) - p(x, y - 1));
      const double s = std::sqrt(px * px + py * py);
      const double dp = detail::double_well_ratio(s) - 1.0;
      reg_x.at(x, y) = dp * px;
      reg_y.at(x, y) = dp * py;
      const double gn = gp(x, y) / (s + detail::kGradEps);
      edge_x.at(x, y) = gn * px;
      edge_y.at(x, y) = gn * py;
    }
  }

  LevelSetField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = p(x, y);
      const double lap = p(x + 1, y) + p(x - 1, y) + p(x, y + 1) + p(x, y - 1) - 4.0 * c;
      const double reg = 0.5 * (reg_x(x + 1, y) - reg_x(x - 1, y)) + 0.5 * (reg_y(x, y + 1) - reg_y(x, y - 1)) + lap;
      const double delta = detail::smoothed_delta(c, params.epsilon);
      double v = c + params.dt * params.mu * reg;
      if (delta != 0.0) {
        const double div_edge =
            0.5 * (edge_x(x + 1, y) - edge_x(x - 1, y)) + 0.5 * (edge_y(x, y + 1) - edge_y(x, y - 1));
        v += params.dt * (params.lambda * delta * div_edge + params.balloon * g(x, y) * delta);
      }
      out(x, y) = v;
    }
  }
  if (forbidden) {
    for (std::size_t i = 0; i < out.size(); ++i)
      if ((*forbidden)[i]) out[i] = params.c0;
  }
  return out;
}

struct DrlseOutcome {
  LevelSetField phi;
  int iterations = 0;
  bool converged = false;
};

/// Iterates drlse_step. Every check_every steps the zero-sublevel mask is
/// compared with the previous checkpoint (the initial mask is checkpoint 0);
/// evolution stops when fewer than converge_frac of the domain's pixels
/// changed, or after max_iters steps.
inline DrlseOutcome drlse_run(const LevelSetField& phi0, const ScalarField& g, const DrlseParams& params,
                              const std::optional<BinaryMask>& forbidden = std::nullopt) {
  params.validate();
  require_same_shape(phi0, g, "phi and g must have the same dimensions");
  DrlseOutcome r{phi0, 0, false};
  auto previous = zero_sublevel_mask(phi0);
  const double domain = static_cast<double>(phi0.size());
  while (r.iterations < params.max_iters) {
    r.phi = drlse_step(r.phi, g, params, forbidden);
    ++r.iterations;
    if (r.iterations % params.check_every == 0) {
      auto current = zero_sublevel_mask(r.phi);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < current.size(); ++i) changed += current[i] != previous[i] ? 1 : 0;
      previous = std::move(current);
      if (static_cast<double>(changed) < params.converge_frac * domain) {
        r.converged = true;
        break;
      }
    }
  }
  return r;
}

}  // namespace cytoseg
