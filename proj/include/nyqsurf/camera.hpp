#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nyqsurf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kDefaultNear = 1e-4;

// Pinhole camera. Camera space looks along +Z, pixel x right, y down.
// rotation/translation map world points into camera space: X_C = R X + t.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 1;
  int height = 1;
  double near = kDefaultNear;

  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 optical_axis() const { return rotation.transpose().col(2); }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
};

inline void validate(const Camera& cam) {
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0))
    throw std::invalid_argument("camera: focal lengths must be positive");
  if (cam.width < 1 || cam.height < 1)
    throw std::invalid_argument("camera: image size must be at least 1x1");
  if (!(cam.near > 0.0)) throw std::invalid_argument("camera: near must be positive");
  const Mat3 rtr = cam.rotation.transpose() * cam.rotation;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
        throw std::invalid_argument("camera: rotation is not orthonormal");
  if (std::abs(cam.rotation.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("camera: rotation determinant is not +1");
}

struct PixelDepth {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
};

inline PixelDepth project(const Vec3& point, const Camera& cam) {
  const Vec3 pc = cam.to_camera(point);
  return {cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy, pc.z()};
}

// Camera-space ray direction through a continuous pixel position, with z = 1.
inline Vec3 pixel_ray_camera(const Camera& cam, double x, double y) {
  return {(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0};
}

inline Vec3 unproject(const PixelDepth& pd, const Camera& cam) {
  if (!(pd.depth > 0.0)) throw std::invalid_argument("unproject: depth must be positive");
  const Vec3 pc = pixel_ray_camera(cam, pd.x, pd.y) * pd.depth;
  return cam.rotation.transpose() * (pc - cam.translation);
}

// Pixel centers sit at integer coordinates, so a point unprojected from row or
// column 0 can project back a few ulps below zero. The lower bound absorbs that.
inline constexpr double kPixelRoundoff = 1e-9;

inline bool visible(const Vec3& point, const Camera& cam) {
  const Vec3 pc = cam.to_camera(point);
  if (!(pc.z() >= cam.near)) return false;
  const double x = cam.fx * pc.x() / pc.z() + cam.cx;
  const double y = cam.fy * pc.y() / pc.z() + cam.cy;
  return x >= -kPixelRoundoff && x < cam.width && y >= -kPixelRoundoff && y < cam.height;
}

// How the per-camera sampling rate is measured.
//  Area:    pixels per unit world area, fx*fy/d^2 (the |J| of the projection).
//  PerAxis: pixels per unit world length, sqrt(fx*fy)/d.
enum class RateMode { Area, PerAxis };

inline double sampling_rate(const Camera& cam, double depth, RateMode mode = RateMode::Area) {
  if (!(depth > 0.0)) throw std::invalid_argument("sampling_rate: depth must be positive");
  if (mode == RateMode::PerAxis) return std::sqrt(cam.fx * cam.fy) / depth;
  return cam.fx * cam.fy / (depth * depth);
}

// Independent check of sampling_rate: projects a small fronto-parallel square
// centered at `point` and measures its pixel area with the shoelace formula.
inline double numeric_area_oracle(const Camera& cam, const Vec3& point, double patch_halfwidth) {
  if (!(patch_halfwidth > 0.0))
    throw std::invalid_argument("numeric_area_oracle: halfwidth must be positive");
  // Camera x/y axes expressed in world frame span the fronto-parallel plane.
  const Vec3 ax = cam.rotation.transpose().col(0);
  const Vec3 ay = cam.rotation.transpose().col(1);
  const std::array<Vec2, 4> offsets = {Vec2{-1, -1}, Vec2{1, -1}, Vec2{1, 1}, Vec2{-1, 1}};
  std::array<Vec2, 4> px;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec3 corner =
        point + patch_halfwidth * (offsets[i].x() * ax + offsets[i].y() * ay);
    if (!visible(corner, cam))
      throw std::invalid_argument("numeric_area_oracle: patch corner not visible");
    const PixelDepth pd = project(corner, cam);
    px[i] = {pd.x, pd.y};
  }
  double twice_area = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2& a = px[i];
    const Vec2& b = px[(i + 1) % 4];
    twice_area += a.x() * b.y() - b.x() * a.y();
  }
  const double pixel_area = 0.5 * std::abs(twice_area);
  const double world_area = 4.0 * patch_halfwidth * patch_halfwidth;
  return pixel_area / world_area;
}

// Camera at `eye` looking at `target`, with image y roughly along `down`.
inline Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& down, double fx,
                      double fy, double cx, double cy, int width, int height) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = down.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  cam.translation = -cam.rotation * eye;
  return cam;
}

}  // namespace nyqsurf
