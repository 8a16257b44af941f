#pragma once

#include "nyqsurf/camera.hpp"
#include "nyqsurf/scene.hpp"
#include "nyqsurf/surfel.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nyqsurf::synth {

enum class SceneKind { Plane, TiltedPlane, TwoSpheres, StepEdge };

inline SceneKind parse_kind(const std::string& name) {
  if (name == "plane") return SceneKind::Plane;
  if (name == "tilted_plane") return SceneKind::TiltedPlane;
  if (name == "two_spheres") return SceneKind::TwoSpheres;
  if (name == "step_edge") return SceneKind::StepEdge;
  throw std::invalid_argument("unknown scene kind '" + name +
                              "' (expected plane|tilted_plane|two_spheres|step_edge)");
}

inline const char* to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::Plane: return "plane";
    case SceneKind::TiltedPlane: return "tilted_plane";
    case SceneKind::TwoSpheres: return "two_spheres";
    case SceneKind::StepEdge: return "step_edge";
  }
  return "?";
}

struct SynthParams {
  SceneKind kind = SceneKind::Plane;
  int width = 80;
  int height = 64;
  double focal = 80.0;
  double depth = 2.0;       // distance of the main surface along +z
  double angle_deg = 30.0;  // tilt for TiltedPlane
  int views = 2;
  double baseline = 0.1;    // camera spacing as a fraction of depth
  double gt_scale_px = 0.6; // ground-truth surfel scale in pixels at its depth
  unsigned seed = 0;
};

struct SurfaceHit {
  double t = 0.0;
  Vec3 point;
  Vec3 normal;  // unit, sign unspecified
  Rgb color;
};

namespace detail {

inline Rgb texture(const Vec3& p, double scale, const Rgb& tint) {
  const double k = 2.0 * std::numbers::pi / scale;
  const Rgb wave(std::sin(k * p.x() + 0.3), std::sin(k * p.y() + 1.1), std::sin(k * (p.x() + p.y()) + 2.0));
  return (tint + 0.1 * wave).cwiseMax(0.0).cwiseMin(1.0);
}

inline std::optional<double> ray_plane(const Vec3& o, const Vec3& d, const Vec3& p, const Vec3& n) {
  const double den = d.dot(n);
  if (std::abs(den) < 1e-15) return std::nullopt;
  const double t = (p - o).dot(n) / den;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

inline std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  const Vec3 oc = o - c;
  const double a = d.dot(d);
  const double b = oc.dot(d);
  const double cc = oc.dot(oc) - r * r;
  const double disc = b * b - a * cc;
  if (disc < 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / a;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

}  // namespace detail

// Analytic surface of a synthetic scene, queried by ray casting.
class AnalyticSurface {
 public:
  explicit AnalyticSurface(const SynthParams& p) : p_(p) {}

  Vec3 tilted_normal() const {
    const double a = p_.angle_deg * std::numbers::pi / 180.0;
    return Vec3(std::sin(a), 0.0, -std::cos(a));
  }

  std::optional<SurfaceHit> cast(const Vec3& o, const Vec3& d) const {
    const double z = p_.depth;
    const double tex = z;
    std::optional<SurfaceHit> best;
    const auto consider = [&](std::optional<double> t, const Vec3& n, const Rgb& tint, auto&& normal_at) {
      if (!t || (best && *t >= best->t)) return;
      SurfaceHit h;
      h.t = *t;
      h.point = o + *t * d;
      h.normal = normal_at(h.point, n);
      h.color = detail::texture(h.point, tex, tint);
      best = h;
    };
    const auto flat = [](const Vec3&, const Vec3& n) { return n; };
    switch (p_.kind) {
      case SceneKind::Plane:
        consider(detail::ray_plane(o, d, {0, 0, z}, {0, 0, -1}), {0, 0, -1}, Rgb(0.55, 0.5, 0.45), flat);
        break;
      case SceneKind::TiltedPlane:
        consider(detail::ray_plane(o, d, {0, 0, z}, tilted_normal()), tilted_normal(), Rgb(0.5, 0.55, 0.5), flat);
        break;
      case SceneKind::StepEdge: {
        const auto near_t = detail::ray_plane(o, d, {0, 0, z}, {0, 0, -1});
        if (near_t && (o + *near_t * d).x() < 0.0)
          consider(near_t, {0, 0, -1}, Rgb(0.6, 0.5, 0.4), flat);
        const auto far_t = detail::ray_plane(o, d, {0, 0, 1.25 * z}, {0, 0, -1});
        if (far_t && (o + *far_t * d).x() >= 0.0)
          consider(far_t, {0, 0, -1}, Rgb(0.45, 0.5, 0.6), flat);
        // riser joining the two levels, seen by cameras on the +x side
        const auto riser_t = detail::ray_plane(o, d, {0, 0, z}, {1, 0, 0});
        if (riser_t) {
          const double hz = (o + *riser_t * d).z();
          if (hz >= z && hz <= 1.25 * z) consider(riser_t, {1, 0, 0}, Rgb(0.5, 0.45, 0.5), flat);
        }
        break;
      }
      case SceneKind::TwoSpheres: {
        const double r = 0.2 * z;
        const auto sphere_normal = [](const Vec3& c) {
          return [c](const Vec3& x, const Vec3&) { return Vec3((x - c).normalized()); };
        };
        const Vec3 c0(-0.25 * z, 0.0, z), c1(0.25 * z, 0.05 * z, 1.15 * z);
        consider(detail::ray_sphere(o, d, c0, r), {}, Rgb(0.65, 0.45, 0.4), sphere_normal(c0));
        consider(detail::ray_sphere(o, d, c1, r), {}, Rgb(0.4, 0.55, 0.65), sphere_normal(c1));
        consider(detail::ray_plane(o, d, {0, 0, 1.6 * z}, {0, 0, -1}), {0, 0, -1}, Rgb(0.5, 0.5, 0.5), flat);
        break;
      }
    }
    return best;
  }

 private:
  SynthParams p_;
};

inline std::vector<Camera> make_cameras(const SynthParams& p) {
  if (p.views < 1 || p.width < 1 || p.height < 1 || !(p.focal > 0.0) || !(p.depth > 0.0))
    throw std::invalid_argument("synth: invalid camera parameters");
  std::vector<Camera> cams;
  for (int i = 0; i < p.views; ++i) {
    Camera cam;
    cam.fx = cam.fy = p.focal;
    cam.cx = 0.5 * (p.width - 1);
    cam.cy = 0.5 * (p.height - 1);
    cam.width = p.width;
    cam.height = p.height;
    const double x = (i - 0.5 * (p.views - 1)) * p.baseline * p.depth;
    cam.translation = Vec3(-x, 0.0, 0.0);  // identity rotation, center at (x, 0, 0)
    cams.push_back(cam);
  }
  return cams;
}

// Deterministic scene with analytic color/depth/normal targets and a dense
// ground-truth field (one surfel per pixel of every view).
inline SceneBundle synth_scene(const SynthParams& p) {
  const AnalyticSurface surface(p);
  SceneBundle scene;
  scene.cameras = make_cameras(p);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> spin(0.0, 2.0 * std::numbers::pi);

  for (const Camera& cam : scene.cameras) {
    Vec3Image color(cam.width, cam.height, Rgb::Zero());
    ScalarImage depth(cam.width, cam.height, 0.0);
    Vec3Image normal(cam.width, cam.height, Vec3::Zero());
    const Vec3 eye = cam.center();
    for (int r = 0; r < cam.height; ++r) {
      for (int c = 0; c < cam.width; ++c) {
        const Vec3 dir = cam.rotation.transpose() * pixel_ray_camera(cam, c, r);
        const auto hit = surface.cast(eye, dir);
        if (!hit) continue;
        Vec3 n = hit->normal;
        if (n.dot(dir) > 0.0) n = -n;
        const double z = cam.to_camera(hit->point).z();
        color.at(r, c) = hit->color;
        depth.at(r, c) = z;
        normal.at(r, c) = n;

        auto [tu, tv] = tangent_frame(n);
        const double th = spin(rng);
        const Vec3 tu2 = std::cos(th) * tu + std::sin(th) * tv;
        const Vec3 tv2 = n.cross(tu2);
        const double s = p.gt_scale_px * z / std::max(cam.fx, cam.fy);
        scene.field.surfels.push_back(make_surfel(hit->point, tu2, tv2, s, s, 1.0, hit->color));
      }
    }
    scene.images.push_back(std::move(color));
    scene.depth.emplace_back(std::move(depth));
    scene.normal.emplace_back(std::move(normal));
  }
  scene.config["scene.kind"] = to_string(p.kind);
  return scene;
}

// rows x cols grid of surfels on the plane z = depth covering camera `cam`'s
// view, roughly fronto-parallel, with seeded jitter. Used to initialize fits.
inline SurfelField grid_field(const Camera& cam, int rows, int cols, double depth, unsigned seed,
                              double tilt_jitter_deg = 5.0) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid_field: rows/cols must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  SurfelField field;
  const double step_x = static_cast<double>(cam.width) / cols;
  const double step_y = static_cast<double>(cam.height) / rows;
  const double spacing = std::max(step_x / cam.fx, step_y / cam.fy) * depth;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double x = (j + 0.5) * step_x - 0.5;
      const double y = (i + 0.5) * step_y - 0.5;
      const Vec3 center = unproject({x, y, depth * (1.0 + 0.02 * jitter(rng))}, cam);
      const double tilt = tilt_jitter_deg * std::numbers::pi / 180.0;
      const Mat3 rot = (Eigen::AngleAxisd(tilt * jitter(rng), Vec3::UnitX()) *
                        Eigen::AngleAxisd(tilt * jitter(rng), Vec3::UnitY()))
                           .toRotationMatrix();
      const Vec3 tu = rot * Vec3(cam.rotation.row(0).transpose());
      const Vec3 tv = rot * Vec3(cam.rotation.row(1).transpose());
      field.surfels.push_back(make_surfel(center, tu, tv, 0.6 * spacing, 0.6 * spacing, 0.6, Rgb::Constant(0.5)));
    }
  }
  return field;
}

}  // namespace nyqsurf::synth
