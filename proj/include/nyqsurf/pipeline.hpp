#pragma once

#include "nyqsurf/adaptation.hpp"
#include "nyqsurf/attention.hpp"
#include "nyqsurf/camera.hpp"
#include "nyqsurf/image.hpp"
#include "nyqsurf/nyquist.hpp"
#include "nyqsurf/render.hpp"
#include "nyqsurf/surfel.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nyqsurf {

inline constexpr int kDefaultFeatureChannels = 8;
inline constexpr std::size_t kDefaultBundleCap = 1024;

// Stand-in image features: rgb, normalized pixel coordinates, two
// sinusoidal position encodings and a constant channel.
inline FeatureMap default_features(const Vec3Image& image) {
  FeatureMap map(image.width(), image.height(), kDefaultFeatureChannels);
  const double sx = image.width() > 1 ? 1.0 / (image.width() - 1) : 0.0;
  const double sy = image.height() > 1 ? 1.0 / (image.height() - 1) : 0.0;
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const auto f = map.at(r, c);
      const Rgb& rgb = image.at(r, c);
      const double x = c * sx;
      const double y = r * sy;
      f[0] = rgb.x();
      f[1] = rgb.y();
      f[2] = rgb.z();
      f[3] = x;
      f[4] = y;
      f[5] = std::sin(std::numbers::pi * x);
      f[6] = std::sin(std::numbers::pi * y);
      f[7] = 1.0;
    }
  }
  return map;
}

// Where a head is being evaluated.
struct HeadContext {
  const Camera* camera = nullptr;
  std::size_t view = 0;
  int row = 0;
  int col = 0;
  double depth = 0.0;
  Vec3 center = Vec3::Zero();
};

class DepthHead {
 public:
  virtual ~DepthHead() = default;
  virtual double depth(std::span<const double> feature, const HeadContext& ctx) const = 0;
};

// Produces every attribute of a surfel except its center, which comes from ctx.
class AttrHead {
 public:
  virtual ~AttrHead() = default;
  virtual Surfel attributes(std::span<const double> feature, const HeadContext& ctx) const = 0;
};

// Reads depth from known per-view depth maps.
class OracleDepthHead final : public DepthHead {
 public:
  explicit OracleDepthHead(std::vector<ScalarImage> depth) : depth_(std::move(depth)) {}

  double depth(std::span<const double>, const HeadContext& ctx) const override {
    if (ctx.view >= depth_.size()) throw std::out_of_range("oracle depth: no depth map for view");
    const ScalarImage& d = depth_[ctx.view];
    if (!d.contains(ctx.row, ctx.col)) throw std::out_of_range("oracle depth: pixel outside depth map");
    return d.at(ctx.row, ctx.col);
  }

 private:
  std::vector<ScalarImage> depth_;
};

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// depth = softplus(w . f + b) + offset.
class LinearDepthHead final : public DepthHead {
 public:
  LinearDepthHead(VecX w, double b, double offset = 0.0) : w_(std::move(w)), b_(b), offset_(offset) {}

  double depth(std::span<const double> feature, const HeadContext&) const override {
    if (static_cast<Eigen::Index>(feature.size()) != w_.size())
      throw std::invalid_argument("linear depth head: feature dimension mismatch");
    const Eigen::Map<const VecX> f(feature.data(), w_.size());
    return softplus(w_.dot(f) + b_) + offset_;
  }

 private:
  VecX w_;
  double b_;
  double offset_;
};

// Tangents from camera rows 0 and 1 turned by a rotation vector.
inline std::pair<Vec3, Vec3> camera_aligned_frame(const Camera& cam, const Vec3& rotvec = Vec3::Zero()) {
  const Vec3 tu = cam.rotation.row(0).transpose();
  const Vec3 tv = cam.rotation.row(1).transpose();
  const double angle = rotvec.norm();
  if (angle == 0.0) return {tu, tv};
  const Mat3 rot = Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
  return {rot * tu, rot * tv};
}

// Color from feature channels 0..2, opacity 1, camera-aligned half-pixel surfel.
class IdentityAttrHead final : public AttrHead {
 public:
  Surfel attributes(std::span<const double> feature, const HeadContext& ctx) const override {
    if (feature.size() < 3) throw std::invalid_argument("identity attribute head: need at least 3 channels");
    const auto [tu, tv] = camera_aligned_frame(*ctx.camera);
    const double s = pixel_aligned_scale(*ctx.camera, ctx.depth);
    const Rgb color = Rgb(feature[0], feature[1], feature[2]).cwiseMax(0.0).cwiseMin(1.0);
    return make_surfel(ctx.center, tu, tv, s, s, 1.0, color);
  }
};

// a = W f + b with 9 outputs: rotation vector (3), scale logits (2),
// opacity logit (1), color logits (3). Scales are softplus times the
// half-pixel footprint; opacity and color go through a sigmoid.
class LinearAttrHead final : public AttrHead {
 public:
  static constexpr int kOutputs = 9;

  LinearAttrHead(MatX w, VecX b) : w_(std::move(w)), b_(std::move(b)) {
    if (w_.rows() != kOutputs || b_.size() != kOutputs)
      throw std::invalid_argument("linear attribute head: expected 9 outputs");
  }

  Surfel attributes(std::span<const double> feature, const HeadContext& ctx) const override {
    if (static_cast<Eigen::Index>(feature.size()) != w_.cols())
      throw std::invalid_argument("linear attribute head: feature dimension mismatch");
    const Eigen::Map<const VecX> f(feature.data(), w_.cols());
    const VecX a = w_ * f + b_;
    const auto [tu, tv] = camera_aligned_frame(*ctx.camera, a.head<3>());
    const double base = pixel_aligned_scale(*ctx.camera, ctx.depth);
    const Rgb color(sigmoid(a[6]), sigmoid(a[7]), sigmoid(a[8]));
    return make_surfel(ctx.center, tu, tv, base * softplus(a[3]), base * softplus(a[4]), sigmoid(a[5]), color);
  }

 private:
  MatX w_;
  VecX b_;
};

struct HeadSet {
  std::shared_ptr<const DepthHead> depth;
  std::shared_ptr<const AttrHead> attr;
};

struct PipelineOptions {
  double epsilon = kDefaultFootprintEpsilon;
  std::size_t bundle_cap = kDefaultBundleCap;
  RateMode rate_mode = RateMode::Area;
};

struct PipelineResult {
  SurfelField field;          // pass 2, annotated with nu_hat
  SurfelField initial;        // pass 1
  SurfelField adapted;        // pass 1 after the frequency bound
  std::vector<std::size_t> source_view;
  std::vector<std::size_t> bundle_size;
  std::vector<double> score_sum;  // softmax mass per surfel, 0 when nothing was attended
  std::vector<std::vector<double>> refined;  // refined feature per surfel
};

namespace detail {

inline HeadContext pixel_context(const Camera& cam, std::size_t view, int row, int col) {
  HeadContext ctx;
  ctx.camera = &cam;
  ctx.view = view;
  ctx.row = row;
  ctx.col = col;
  return ctx;
}

}  // namespace detail

// Two-pass pixel-aligned surfel prediction with frequency-bounded feature
// aggregation. Output order is view-major, then row-major within a view.
inline PipelineResult run_pipeline(std::span<const Vec3Image> images, std::span<const Camera> cams,
                                   const HeadSet& heads, const AttentionWeights& w,
                                   const AdaptationConfig& cfg, const PipelineOptions& opt = {}) {
  if (cams.size() < 2) throw std::invalid_argument("run_pipeline: at least two views are required");
  if (images.size() != cams.size()) throw std::invalid_argument("run_pipeline: image/camera count mismatch");
  if (!heads.depth || !heads.attr) throw std::invalid_argument("run_pipeline: missing head");
  if (!(cfg.s > 0.0)) throw std::invalid_argument("run_pipeline: s must be positive");
  if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0)) throw std::invalid_argument("run_pipeline: epsilon must lie in (0,1)");
  if (opt.bundle_cap < 1) throw std::invalid_argument("run_pipeline: bundle cap must be at least 1");
  validate(w);

  std::vector<FeatureMap> maps;
  std::size_t total = 0;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    validate(cams[i]);
    if (images[i].width() != cams[i].width || images[i].height() != cams[i].height)
      throw std::invalid_argument("run_pipeline: image " + std::to_string(i) + " does not match its camera");
    maps.push_back(default_features(images[i]));
    if (maps.back().channels() != w.channels())
      throw std::invalid_argument("run_pipeline: feature channels do not match attention weights");
    total += static_cast<std::size_t>(cams[i].width) * static_cast<std::size_t>(cams[i].height);
  }

  std::vector<HeadContext> ctx(total);
  {
    std::size_t k = 0;
    for (std::size_t i = 0; i < cams.size(); ++i)
      for (int r = 0; r < cams[i].height; ++r)
        for (int c = 0; c < cams[i].width; ++c) ctx[k++] = detail::pixel_context(cams[i], i, r, c);
  }

  PipelineResult res;
  res.initial.surfels.resize(total);
  res.adapted.surfels.resize(total);
  res.field.surfels.resize(total);
  res.source_view.resize(total);
  res.bundle_size.assign(total, 0);
  res.score_sum.assign(total, 0.0);
  res.refined.resize(total);
  std::vector<double> rates(total, 0.0);

  bool failed = false;
  std::string failure;

  // Pass 1: depth, centers, initial attributes, rates and adaptation.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(total); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    try {
      HeadContext& c = ctx[k];
      const auto f = maps[c.view].at(c.row, c.col);
      c.depth = heads.depth->depth(f, c);
      if (!(c.depth > 0.0) || !std::isfinite(c.depth))
        throw std::runtime_error("depth head returned non-positive depth " + std::to_string(c.depth));
      c.center = unproject({double(c.col), double(c.row), c.depth}, *c.camera);
      Surfel sf = heads.attr->attributes(f, c);
      sf.center = c.center;
      validate(sf);
      res.initial.surfels[k] = sf;
      res.source_view[k] = c.view;
      rates[k] = multi_view_rate(sf, cams, opt.rate_mode);
      res.adapted.surfels[k] = rates[k] > 0.0 ? adapt(sf, rates[k], cfg).surfel : sf;
    } catch (const std::exception& e) {
#pragma omp critical
      {
        if (!failed) {
          failed = true;
          failure = "surfel " + std::to_string(k) + ": " + e.what();
        }
      }
    }
  }
  if (failed) throw std::runtime_error("run_pipeline: " + failure);

  // Pass 2: footprint gather, attention refinement, attribute head again.
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(total); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    try {
      const HeadContext& c = ctx[k];
      std::vector<FootprintRegion> regions;
      for (std::size_t i = 0; i < cams.size(); ++i)
        regions.push_back(footprint_region(res.adapted.surfels[k], cams[i], opt.epsilon, i, k));
      const FeatureBundle bundle = gather_features(maps, regions, opt.bundle_cap);
      const auto query = maps[c.view].at(c.row, c.col);
      const AttentionOutput att = cross_attention(query, bundle, w);
      const VecX refined = ffn_residual(att.value, Eigen::Map<const VecX>(query.data(), w.channels()), w);
      res.bundle_size[k] = bundle.size();
      res.score_sum[k] = att.attended ? att.scores.sum() : 0.0;
      res.refined[k].assign(refined.data(), refined.data() + refined.size());
      Surfel sf = heads.attr->attributes(res.refined[k], c);
      sf.center = c.center;
      validate(sf);
      res.field.surfels[k] = sf;
    } catch (const std::exception& e) {
#pragma omp critical
      {
        if (!failed) {
          failed = true;
          failure = "surfel " + std::to_string(k) + ": " + e.what();
        }
      }
    }
  }
  if (failed) throw std::runtime_error("run_pipeline: " + failure);

  annotate(res.field, cams, opt.rate_mode);
  return res;
}

}  // namespace nyqsurf
