#pragma once

#include "nyqsurf/camera.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nyqsurf {

using Rgb = Eigen::Vector3d;

inline constexpr double kMinScale = 1e-8;

namespace diagnostics {
// Number of surfel scales clamped to kMinScale since process start.
inline std::atomic<long long>& clamped_scale_count() {
  static std::atomic<long long> count{0};
  return count;
}
}  // namespace diagnostics

// 2D Gaussian surfel: an oriented elliptical Gaussian disk.
// A point on the surfel is P(u, v) = center + s_u*u*t_u + s_v*v*t_v.
struct Surfel {
  Vec3 center = Vec3::Zero();
  Vec3 t_u = Vec3::UnitX();
  Vec3 t_v = Vec3::UnitY();
  double s_u = 1.0;
  double s_v = 1.0;
  double opacity = 1.0;
  Rgb color = Rgb::Constant(0.5);

  Vec3 normal() const { return t_u.cross(t_v); }
  Vec3 point_at(double u, double v) const { return center + s_u * u * t_u + s_v * v * t_v; }
};

// Clamps degenerate scales and records each clamp in the diagnostics counter.
inline double clamp_scale(double s) {
  if (s < kMinScale || std::isnan(s)) {
    diagnostics::clamped_scale_count().fetch_add(1, std::memory_order_relaxed);
    return kMinScale;
  }
  return s;
}

inline Surfel make_surfel(const Vec3& center, const Vec3& t_u, const Vec3& t_v, double s_u,
                          double s_v, double opacity, const Rgb& color) {
  Surfel sf;
  sf.center = center;
  sf.t_u = t_u;
  sf.t_v = t_v;
  sf.s_u = clamp_scale(s_u);
  sf.s_v = clamp_scale(s_v);
  sf.opacity = opacity;
  sf.color = color;
  return sf;
}

inline constexpr double kFrameTolerance = 1e-9;
// Surfels read back from float32 storage only hold their frame to this.
inline constexpr double kStoredFrameTolerance = 1e-6;

// Throws std::invalid_argument naming the first violated invariant.
inline void validate(const Surfel& sf, double frame_tol = kFrameTolerance) {
  if (std::abs(sf.t_u.norm() - 1.0) > frame_tol || std::abs(sf.t_v.norm() - 1.0) > frame_tol)
    throw std::invalid_argument("surfel: tangents must be unit length");
  if (std::abs(sf.t_u.dot(sf.t_v)) > frame_tol)
    throw std::invalid_argument("surfel: tangents must be orthogonal");
  if (!(sf.s_u > 0.0) || !(sf.s_v > 0.0)) throw std::invalid_argument("surfel: scales must be positive");
  if (!(sf.opacity >= 0.0 && sf.opacity <= 1.0))
    throw std::invalid_argument("surfel: opacity outside [0,1]");
  for (int c = 0; c < 3; ++c)
    if (!(sf.color[c] >= 0.0 && sf.color[c] <= 1.0))
      throw std::invalid_argument("surfel: color channel outside [0,1]");
}

// Builds an orthonormal tangent pair whose cross product is `n`.
inline std::pair<Vec3, Vec3> tangent_frame(const Vec3& n) {
  const Vec3 w = n.normalized();
  const Vec3 helper = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 tu = (helper - helper.dot(w) * w).normalized();
  const Vec3 tv = w.cross(tu);
  return {tu, tv};
}

// Homogeneous transform H = [s_u t_u, s_v t_v, 0, p; 0 0 0 1].
inline Mat4 transform_matrix(const Surfel& sf) {
  Mat4 h = Mat4::Zero();
  h.block<3, 1>(0, 0) = sf.s_u * sf.t_u;
  h.block<3, 1>(0, 1) = sf.s_v * sf.t_v;
  h.block<3, 1>(0, 3) = sf.center;
  h(3, 3) = 1.0;
  return h;
}

inline double gaussian_weight(double u, double v) { return std::exp(-0.5 * (u * u + v * v)); }

inline Vec3 normal(const Surfel& sf) { return sf.normal(); }

// |G(k)| for wave vector k: 2*pi*s_u*s_v*exp(-(s_u^2 (k.t_u)^2 + s_v^2 (k.t_v)^2)/2).
inline double fourier_magnitude(const Surfel& sf, const Vec3& k) {
  const double a = sf.s_u * k.dot(sf.t_u);
  const double b = sf.s_v * k.dot(sf.t_v);
  return 2.0 * std::numbers::pi * sf.s_u * sf.s_v * std::exp(-0.5 * (a * a + b * b));
}

struct AxisFrequency {
  double u = 0.0;
  double v = 0.0;
  double dominant() const { return std::max(u, v); }
};

// Angular frequency at the 2-sigma energy cutoff: omega = 2/s.
inline AxisFrequency angular_frequency(const Surfel& sf) {
  if (!(sf.s_u > 0.0) || !(sf.s_v > 0.0))
    throw std::invalid_argument("angular_frequency: scales must be positive");
  return {2.0 / sf.s_u, 2.0 / sf.s_v};
}

// Spatial frequency nu = omega / (2 pi) = 1 / (pi s) along each tangent.
inline AxisFrequency spatial_frequency(const Surfel& sf) {
  if (!(sf.s_u > 0.0) || !(sf.s_v > 0.0))
    throw std::invalid_argument("spatial_frequency: scales must be positive");
  return {1.0 / (std::numbers::pi * sf.s_u), 1.0 / (std::numbers::pi * sf.s_v)};
}

// Ordered surfels plus optional per-surfel analysis annotations.
struct SurfelField {
  std::vector<Surfel> surfels;
  std::optional<std::vector<double>> sampling_rate;
  std::optional<std::vector<double>> nyquist_ratio;

  std::size_t size() const { return surfels.size(); }
  bool empty() const { return surfels.empty(); }

  void set_sampling_rate(std::vector<double> rates) {
    if (rates.size() != surfels.size())
      throw std::invalid_argument("SurfelField: sampling-rate annotation length mismatch");
    sampling_rate = std::move(rates);
  }
  void set_nyquist_ratio(std::vector<double> ratios) {
    if (ratios.size() != surfels.size())
      throw std::invalid_argument("SurfelField: ratio annotation length mismatch");
    nyquist_ratio = std::move(ratios);
  }
};

}  // namespace nyqsurf
