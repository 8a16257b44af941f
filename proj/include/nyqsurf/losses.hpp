#pragma once

#include "nyqsurf/camera.hpp"
#include "nyqsurf/image.hpp"
#include "nyqsurf/render.hpp"
#include "nyqsurf/surfel.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nyqsurf {

// Pixels whose rendered alpha is below this carry no alignment term.
inline constexpr double kAlignAlphaThreshold = 1e-4;

struct LossWeights {
  double lambda_geo = 1.0;
  double lambda_align = 0.05;
  double lambda_d = 1.0;
  double lambda_n = 1.0;
  double lambda_lpips = 0.0;  // perceptual loss is not implemented; must stay 0
};

inline void validate(const LossWeights& w) {
  if (w.lambda_geo < 0.0 || w.lambda_align < 0.0 || w.lambda_d < 0.0 || w.lambda_n < 0.0)
    throw std::invalid_argument("LossWeights: weights must be non-negative");
  if (w.lambda_lpips != 0.0)
    throw std::invalid_argument("LossWeights: lambda_lpips must be 0 (LPIPS is not supported)");
}

// Per-view supervision. depth/normal entries are optional per view.
struct FitTargets {
  std::vector<Vec3Image> color;
  std::vector<std::optional<ScalarImage>> depth;
  std::vector<std::optional<Vec3Image>> normal;

  std::size_t views() const { return color.size(); }
};

inline void validate(const FitTargets& t, std::span<const Camera> cams) {
  if (t.color.size() != cams.size())
    throw std::invalid_argument("FitTargets: " + std::to_string(t.color.size()) +
                                " color targets for " + std::to_string(cams.size()) + " cameras");
  if (t.depth.size() != cams.size() || t.normal.size() != cams.size())
    throw std::invalid_argument("FitTargets: depth/normal slots must match camera count");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto w = cams[i].width, h = cams[i].height;
    const auto fits = [&](const auto& img) { return img.width() == w && img.height() == h; };
    if (!fits(t.color[i]) || (t.depth[i] && !fits(*t.depth[i])) || (t.normal[i] && !fits(*t.normal[i])))
      throw std::invalid_argument("FitTargets: view " + std::to_string(i) +
                                  " dimensions do not match its camera");
  }
}

// Mean over pixels and channels of the squared RGB error.
inline double render_loss(const RenderBuffers& rendered, const FitTargets& target, std::size_t view) {
  if (view >= target.color.size()) throw std::invalid_argument("render_loss: view out of range");
  const Vec3Image& ref = target.color[view];
  if (ref.width() != rendered.color.width() || ref.height() != rendered.color.height())
    throw std::invalid_argument("render_loss: dimension mismatch");
  if (ref.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t p = 0; p < ref.size(); ++p) sum += (rendered.color[p] - ref[p]).squaredNorm();
  return sum / (3.0 * static_cast<double>(ref.size()));
}

// Normals from a depth map by unprojecting pixels and crossing central
// differences (one-sided at the border). Pixels with a zero-depth neighbor in
// the stencil, or without support along an axis, get (0,0,0).
inline Vec3Image depth_to_normal(const ScalarImage& depth, const Camera& cam) {
  const int w = depth.width();
  const int h = depth.height();
  Vec3Image out(w, h, Vec3::Zero());
  const Vec3 eye = cam.center();
  const auto point = [&](int r, int c) { return unproject({double(c), double(r), depth.at(r, c)}, cam); };
  const auto valid = [&](int r, int c) { return depth.contains(r, c) && depth.at(r, c) > 0.0; };

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!valid(r, c)) continue;
      int c0 = c - 1, c1 = c + 1, r0 = r - 1, r1 = r + 1;
      if (c0 < 0) c0 = c;
      if (c1 >= w) c1 = c;
      if (r0 < 0) r0 = r;
      if (r1 >= h) r1 = r;
      if (c0 == c1 || r0 == r1) continue;
      if (!valid(r, c0) || !valid(r, c1) || !valid(r0, c) || !valid(r1, c)) continue;
      const Vec3 dx = point(r, c1) - point(r, c0);
      const Vec3 dy = point(r1, c) - point(r0, c);
      Vec3 n = dx.cross(dy);
      const double len = n.norm();
      if (!(len > 0.0)) continue;
      n /= len;
      if (n.dot(point(r, c) - eye) > 0.0) n = -n;
      out.at(r, c) = n;
    }
  }
  return out;
}

// sum over pixels and contributing surfels of w_i (1 - n_i . N), divided by
// the pixel count. N comes from the rendered depth. Uses the kept
// contributions when present, otherwise the per-pixel sums
// sum_i w_i - (sum_i w_i n_i) . N.
inline double align_loss(const RenderResult& rendered, const Camera& cam) {
  const RenderBuffers& buf = rendered.buffers;
  if (buf.depth.empty()) return 0.0;
  const bool per_surfel = rendered.contributions.size() == buf.depth.size();
  if (!per_surfel && (rendered.weight_sum.size() != buf.depth.size() ||
                      rendered.weighted_normal.size() != buf.depth.size()))
    throw std::invalid_argument("align_loss: render carries neither contributions nor weight sums");
  const Vec3Image normals = depth_to_normal(buf.depth, cam);
  double sum = 0.0;
  for (std::size_t p = 0; p < normals.size(); ++p) {
    if (buf.alpha[p] < kAlignAlphaThreshold) continue;
    const Vec3& n_depth = normals[p];
    if (n_depth.squaredNorm() == 0.0) continue;
    if (per_surfel) {
      for (const Contribution& c : rendered.contributions[p]) sum += c.weight * (1.0 - c.normal.dot(n_depth));
    } else {
      sum += rendered.weight_sum[p] - rendered.weighted_normal[p].dot(n_depth);
    }
  }
  return sum / static_cast<double>(normals.size());
}

inline double align_loss(const SurfelField& field, const Camera& cam, const Rgb& background = Rgb::Zero()) {
  RenderOptions opt;
  opt.background = background;
  return align_loss(render_detailed(field, cam, opt), cam);
}

inline double depth_mse(const ScalarImage& rendered, const ScalarImage& target) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < target.size(); ++p) {
    if (!(target[p] > 0.0)) continue;
    const double d = rendered[p] - target[p];
    sum += d * d;
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

// Mean over valid pixels and the three components.
inline double normal_mse(const Vec3Image& rendered, const Vec3Image& target) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < target.size(); ++p) {
    if (target[p].squaredNorm() == 0.0) continue;
    sum += (rendered[p] - target[p]).squaredNorm();
    ++count;
  }
  return count ? sum / (3.0 * static_cast<double>(count)) : 0.0;
}

struct LossBreakdown {
  double render = 0.0;
  double align = 0.0;
  double depth = 0.0;
  double normal = 0.0;
  double geo = 0.0;
  double total = 0.0;
};

// Geometric terms averaged over views.
inline LossBreakdown geo_loss_terms(std::span<const RenderResult> renders, std::span<const Camera> cams,
                                    const FitTargets& targets, const LossWeights& w) {
  validate(w);
  if (renders.size() != cams.size() || targets.views() != cams.size())
    throw std::invalid_argument("geo_loss: view count mismatch");
  LossBreakdown out;
  if (cams.empty()) return out;
  const double nv = static_cast<double>(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    if (w.lambda_align > 0.0) out.align += align_loss(renders[i], cams[i]) / nv;
    if (w.lambda_d > 0.0) {
      if (!targets.depth[i]) throw std::invalid_argument("geo_loss: lambda_d > 0 but view " + std::to_string(i) + " has no depth target");
      out.depth += depth_mse(renders[i].buffers.depth, *targets.depth[i]) / nv;
    }
    if (w.lambda_n > 0.0) {
      if (!targets.normal[i]) throw std::invalid_argument("geo_loss: lambda_n > 0 but view " + std::to_string(i) + " has no normal target");
      out.normal += normal_mse(renders[i].buffers.normal, *targets.normal[i]) / nv;
    }
  }
  out.geo = w.lambda_align * out.align + w.lambda_d * out.depth + w.lambda_n * out.normal;
  return out;
}

inline double geo_loss(std::span<const RenderResult> renders, std::span<const Camera> cams,
                       const FitTargets& targets, const LossWeights& w) {
  return geo_loss_terms(renders, cams, targets, w).geo;
}

// L = mean_view L_render + lambda_geo * L_geo.
inline LossBreakdown total_loss_terms(std::span<const RenderResult> renders, std::span<const Camera> cams,
                                      const FitTargets& targets, const LossWeights& w) {
  LossBreakdown out = w.lambda_geo > 0.0 ? geo_loss_terms(renders, cams, targets, w) : LossBreakdown{};
  validate(w);
  if (renders.size() != cams.size() || targets.views() != cams.size())
    throw std::invalid_argument("total_loss: view count mismatch");
  for (std::size_t i = 0; i < cams.size(); ++i)
    out.render += render_loss(renders[i].buffers, targets, i) / static_cast<double>(cams.size());
  out.total = out.render + w.lambda_geo * out.geo;
  return out;
}

inline double total_loss(std::span<const RenderResult> renders, std::span<const Camera> cams,
                         const FitTargets& targets, const LossWeights& w) {
  return total_loss_terms(renders, cams, targets, w).total;
}

inline std::vector<RenderResult> render_views(const SurfelField& field, std::span<const Camera> cams,
                                              const Rgb& background, bool keep_contributions) {
  RenderOptions opt;
  opt.background = background;
  opt.keep_contributions = keep_contributions;
  std::vector<RenderResult> out;
  out.reserve(cams.size());
  for (const Camera& cam : cams) out.push_back(render_detailed(field, cam, opt));
  return out;
}

// Renders every view and evaluates the full loss.
inline LossBreakdown evaluate_loss(const SurfelField& field, std::span<const Camera> cams,
                                   const FitTargets& targets, const LossWeights& w,
                                   const Rgb& background = Rgb::Zero()) {
  const auto renders = render_views(field, cams, background, false);
  return total_loss_terms(renders, cams, targets, w);
}

}  // namespace nyqsurf
