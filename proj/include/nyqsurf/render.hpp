#pragma once

#include "nyqsurf/adaptation.hpp"
#include "nyqsurf/camera.hpp"
#include "nyqsurf/image.hpp"
#include "nyqsurf/surfel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace nyqsurf {

// Expected surfel contribution is ignored once u^2 + v^2 exceeds this (G < 1.3e-4).
inline constexpr double kGaussianCutoffSq = 18.0;
inline constexpr double kDefaultFootprintEpsilon = 0.1353352832366127;  // e^-2
inline constexpr double kParallelRayTolerance = 1e-12;
inline constexpr double kWeightFloor = 1e-8;

// Pixel (row, col) samples the continuous image position (x = col, y = row).
struct PixelIndex {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PixelIndex&, const PixelIndex&) = default;
};

struct SplatHit {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

namespace detail {

// Surfel expressed in the camera frame.
struct CameraSurfel {
  Vec3 center;
  Vec3 t_u;
  Vec3 t_v;
  Vec3 normal;
  double s_u = 1.0;
  double s_v = 1.0;
  double offset = 0.0;  // center . normal
};

inline CameraSurfel to_camera_frame(const Surfel& sf, const Camera& cam) {
  CameraSurfel cs;
  cs.center = cam.to_camera(sf.center);
  cs.t_u = cam.rotation * sf.t_u;
  cs.t_v = cam.rotation * sf.t_v;
  cs.normal = cs.t_u.cross(cs.t_v);
  cs.s_u = sf.s_u;
  cs.s_v = sf.s_v;
  cs.offset = cs.center.dot(cs.normal);
  return cs;
}

// ray has z = 1, so the ray parameter equals camera depth.
inline std::optional<SplatHit> intersect(const CameraSurfel& cs, const Vec3& ray, double near) {
  const double denom = ray.dot(cs.normal);
  if (std::abs(denom) < kParallelRayTolerance * ray.norm()) return std::nullopt;
  const double depth = cs.offset / denom;
  if (!(depth > near)) return std::nullopt;
  const Vec3 q = depth * ray - cs.center;
  return SplatHit{q.dot(cs.t_u) / cs.s_u, q.dot(cs.t_v) / cs.s_v, depth};
}

struct PixelBox {
  int row0 = 0, row1 = -1, col0 = 0, col1 = -1;  // inclusive
  bool empty() const { return row1 < row0 || col1 < col0; }
};

// Pixels whose centers can see the surfel disk u^2 + v^2 <= radius^2. The disk
// is enclosed by a circumscribed 16-gon; its projection (convex, all vertices in
// front of the near plane) bounds the projected disk. A disk crossing the near
// plane falls back to the whole image.
inline PixelBox screen_bounds(const CameraSurfel& cs, const Camera& cam, double radius) {
  constexpr int kSides = 16;
  const double r = radius / std::cos(std::numbers::pi / kSides);
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  const PixelBox full{0, cam.height - 1, 0, cam.width - 1};
  for (int i = 0; i < kSides; ++i) {
    const double th = 2.0 * std::numbers::pi * (i + 0.5) / kSides;
    const Vec3 p = cs.center + r * std::cos(th) * cs.s_u * cs.t_u + r * std::sin(th) * cs.s_v * cs.t_v;
    if (!(p.z() > cam.near)) return full;
    const double x = cam.fx * p.x() / p.z() + cam.cx;
    const double y = cam.fy * p.y() / p.z() + cam.cy;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const auto to_int = [](double v, int lo, int hi) {
    return static_cast<int>(std::clamp(v, static_cast<double>(lo), static_cast<double>(hi)));
  };
  PixelBox box;
  box.col0 = to_int(std::floor(xmin), 0, cam.width);
  box.col1 = to_int(std::ceil(xmax), -1, cam.width - 1);
  box.row0 = to_int(std::floor(ymin), 0, cam.height);
  box.row1 = to_int(std::ceil(ymax), -1, cam.height - 1);
  return box;
}

// Total order used to break exact depth ties independently of input order.
inline bool content_less(const Surfel& a, const Surfel& b) {
  const auto key = [](const Surfel& s) {
    return std::make_tuple(s.center.x(), s.center.y(), s.center.z(), s.t_u.x(), s.t_u.y(),
                           s.t_u.z(), s.t_v.x(), s.t_v.y(), s.t_v.z(), s.s_u, s.s_v, s.opacity,
                           s.color.x(), s.color.y(), s.color.z());
  };
  return key(a) < key(b);
}

}  // namespace detail

inline std::optional<SplatHit> ray_splat_intersect(const Camera& cam, const Vec2& pixel,
                                                   const Surfel& sf) {
  return detail::intersect(detail::to_camera_frame(sf, cam),
                           pixel_ray_camera(cam, pixel.x(), pixel.y()), cam.near);
}

struct RenderBuffers {
  Vec3Image color;
  ScalarImage depth;
  Vec3Image normal;  // world frame, camera-facing
  ScalarImage alpha;
};

// One surfel's participation in one pixel, in compositing order.
struct Contribution {
  std::uint32_t surfel = 0;
  double gaussian = 0.0;
  double alpha = 0.0;   // opacity * gaussian
  double weight = 0.0;  // transmittance * alpha
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();  // world frame, camera-facing
};

struct RenderOptions {
  Rgb background = Rgb::Zero();
  bool keep_contributions = false;
};

struct RenderResult {
  RenderBuffers buffers;
  std::vector<std::vector<Contribution>> contributions;  // per pixel, row-major; empty unless kept
  ScalarImage weight_sum;      // sum of weights per pixel
  Vec3Image weighted_normal;   // sum of weight * world normal per pixel
};

inline RenderResult render_detailed(const SurfelField& field, const Camera& cam,
                                    const RenderOptions& opt = {}) {
  const int w = cam.width;
  const int h = cam.height;
  RenderResult res;
  res.buffers.color = Vec3Image(w, h, opt.background);
  res.buffers.depth = ScalarImage(w, h, 0.0);
  res.buffers.normal = Vec3Image(w, h, Vec3::Zero());
  res.buffers.alpha = ScalarImage(w, h, 0.0);
  if (opt.keep_contributions) res.contributions.resize(static_cast<std::size_t>(w) * h);

  res.weight_sum = ScalarImage(w, h, 0.0);
  res.weighted_normal = Vec3Image(w, h, Vec3::Zero());

  const std::size_t n = field.size();
  const std::size_t npix = static_cast<std::size_t>(w) * h;
  std::vector<detail::CameraSurfel> cs(n);
  std::vector<Vec3> n_world(n);  // world normal of the camera-frame normal
  std::vector<detail::PixelBox> boxes(n);
  // Candidate lists in compressed-row form: count, prefix-sum, fill.
  std::vector<std::uint32_t> start(npix + 1, 0);
  const double radius = std::sqrt(kGaussianCutoffSq);
  for (std::size_t k = 0; k < n; ++k) {
    cs[k] = detail::to_camera_frame(field.surfels[k], cam);
    n_world[k] = cam.rotation.transpose() * cs[k].normal;
    boxes[k] = detail::screen_bounds(cs[k], cam, radius);
    for (int r = boxes[k].row0; r <= boxes[k].row1; ++r)
      for (int c = boxes[k].col0; c <= boxes[k].col1; ++c) ++start[static_cast<std::size_t>(r) * w + c + 1];
  }
  for (std::size_t p = 0; p < npix; ++p) start[p + 1] += start[p];
  std::vector<std::uint32_t> candidates(start[npix]);
  {
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::size_t k = 0; k < n; ++k)
      for (int r = boxes[k].row0; r <= boxes[k].row1; ++r)
        for (int c = boxes[k].col0; c <= boxes[k].col1; ++c)
          candidates[fill[static_cast<std::size_t>(r) * w + c]++] = static_cast<std::uint32_t>(k);
  }

  struct Hit {
    std::uint32_t k;
    double depth;
    double g;
    bool flip;
  };
  const auto hit_less = [&](const Hit& a, const Hit& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return detail::content_less(field.surfels[a.k], field.surfels[b.k]);
  };
#pragma omp parallel
  {
    std::vector<Hit> hits;
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(npix); ++pi) {
      const auto p = static_cast<std::size_t>(pi);
      const int row = static_cast<int>(p / static_cast<std::size_t>(w));
      const int col = static_cast<int>(p % static_cast<std::size_t>(w));
      const Vec3 ray = pixel_ray_camera(cam, col, row);
      const double parallel_tol = kParallelRayTolerance * ray.norm();

      hits.clear();
      for (std::uint32_t j = start[p]; j < start[p + 1]; ++j) {
        const std::uint32_t k = candidates[j];
        const detail::CameraSurfel& s = cs[k];
        // same arithmetic as detail::intersect
        const double denom = ray.dot(s.normal);
        if (std::abs(denom) < parallel_tol) continue;
        const double depth = s.offset / denom;
        if (!(depth > cam.near)) continue;
        const Vec3 d = depth * ray - s.center;
        const double u = d.dot(s.t_u) / s.s_u;
        const double v = d.dot(s.t_v) / s.s_v;
        const double q = u * u + v * v;
        if (q > kGaussianCutoffSq) continue;
        hits.push_back({k, depth, std::exp(-0.5 * q), denom > 0.0});
      }
      // insertion sort: lists are short
      for (std::size_t i = 1; i < hits.size(); ++i) {
        const Hit x = hits[i];
        std::size_t j = i;
        for (; j > 0 && hit_less(x, hits[j - 1]); --j) hits[j] = hits[j - 1];
        hits[j] = x;
      }

      double transmittance = 1.0;
      Vec3 color = Vec3::Zero();
      Vec3 nsum = Vec3::Zero();
      double dsum = 0.0;
      double wsum = 0.0;
      std::vector<Contribution>* contrib = opt.keep_contributions ? &res.contributions[p] : nullptr;
      if (contrib) contrib->reserve(hits.size());
      for (const Hit& hit : hits) {
        const Surfel& sf = field.surfels[hit.k];
        const double a = sf.opacity * hit.g;
        const double weight = transmittance * a;
        const Vec3 nw = hit.flip ? Vec3(-n_world[hit.k]) : n_world[hit.k];
        color += weight * sf.color;
        nsum += weight * nw;
        dsum += weight * hit.depth;
        wsum += weight;
        if (contrib) contrib->push_back({hit.k, hit.g, a, weight, hit.depth, nw});
        transmittance *= (1.0 - a);
      }
      res.buffers.alpha[p] = 1.0 - transmittance;
      if (res.buffers.alpha[p] > 0.0) res.buffers.color[p] = color + transmittance * opt.background;
      res.weight_sum[p] = wsum;
      res.weighted_normal[p] = nsum;
      if (wsum >= kWeightFloor) {
        res.buffers.depth[p] = dsum / wsum;
        const double nn = nsum.norm();
        if (nn > 0.0) res.buffers.normal[p] = nsum / nn;
      }
    }
  }
  return res;
}

inline RenderBuffers render(const SurfelField& field, const Camera& cam,
                            const Rgb& background = Rgb::Zero()) {
  RenderOptions opt;
  opt.background = background;
  return render_detailed(field, cam, opt).buffers;
}

// Pixels of one view where a surfel's splatted Gaussian exceeds epsilon.
struct FootprintRegion {
  std::size_t view = 0;
  std::size_t surfel = 0;
  std::vector<PixelIndex> pixels;  // row-major order
  std::vector<double> values;      // Gaussian value per pixel
};

inline FootprintRegion footprint_region(const Surfel& sf, const Camera& cam, double epsilon,
                                        std::size_t view = 0, std::size_t surfel = 0) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("footprint_region: epsilon must lie in (0,1)");
  FootprintRegion reg;
  reg.view = view;
  reg.surfel = surfel;
  const detail::CameraSurfel cs = detail::to_camera_frame(sf, cam);
  const double radius = std::max(3.0, std::sqrt(-2.0 * std::log(epsilon)));
  const detail::PixelBox box = detail::screen_bounds(cs, cam, radius);
  for (int r = box.row0; r <= box.row1; ++r) {
    for (int c = box.col0; c <= box.col1; ++c) {
      const auto hit = detail::intersect(cs, pixel_ray_camera(cam, c, r), cam.near);
      if (!hit) continue;
      const double g = gaussian_weight(hit->u, hit->v);
      if (g > epsilon) {
        reg.pixels.push_back({r, c});
        reg.values.push_back(g);
      }
    }
  }
  return reg;
}

inline FootprintRegion footprint_region(const AdaptedSurfel& asf, const Camera& cam, double epsilon,
                                        std::size_t view = 0, std::size_t surfel = 0) {
  return footprint_region(asf.surfel, cam, epsilon, view, surfel);
}

// Features gathered for one surfel from its footprint regions across views,
// ordered by (view, row, col).
struct FeatureBundle {
  std::size_t surfel = 0;
  int channels = 0;
  std::vector<std::size_t> views;
  std::vector<PixelIndex> pixels;
  std::vector<double> features;  // size() * channels values

  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
  std::span<const double> feature(std::size_t j) const {
    return {features.data() + j * static_cast<std::size_t>(channels),
            static_cast<std::size_t>(channels)};
  }
};

inline constexpr std::size_t kUnlimitedBundle = std::numeric_limits<std::size_t>::max();

// Collects feature vectors at every region pixel. At most `cap` entries are
// kept, lowest (view, row, col) first.
inline FeatureBundle gather_features(std::span<const FeatureMap> maps,
                                     std::span<const FootprintRegion> regions,
                                     std::size_t cap = kUnlimitedBundle) {
  FeatureBundle bundle;
  if (maps.empty()) throw std::invalid_argument("gather_features: no feature maps");
  bundle.channels = maps.front().channels();
  for (const auto& m : maps)
    if (m.channels() != bundle.channels)
      throw std::invalid_argument("gather_features: feature maps disagree on channel count");
  if (!regions.empty()) bundle.surfel = regions.front().surfel;

  std::vector<const FootprintRegion*> order;
  for (const auto& reg : regions) {
    if (reg.surfel != bundle.surfel)
      throw std::invalid_argument("gather_features: regions belong to different surfels");
    if (reg.view >= maps.size()) throw std::invalid_argument("gather_features: region view out of range");
    order.push_back(&reg);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->view < b->view; });

  for (const FootprintRegion* reg : order) {
    const FeatureMap& map = maps[reg->view];
    std::vector<PixelIndex> px = reg->pixels;
    std::sort(px.begin(), px.end());
    for (const PixelIndex& p : px) {
      if (bundle.size() >= cap) return bundle;
      if (!map.contains(p.row, p.col))
        throw std::logic_error("gather_features: region pixel outside feature map");
      const auto f = map.at(p.row, p.col);
      bundle.views.push_back(reg->view);
      bundle.pixels.push_back(p);
      bundle.features.insert(bundle.features.end(), f.begin(), f.end());
    }
  }
  return bundle;
}

}  // namespace nyqsurf
