#pragma once

#include "nyqsurf/camera.hpp"
#include "nyqsurf/image.hpp"
#include "nyqsurf/losses.hpp"
#include "nyqsurf/nyquist.hpp"
#include "nyqsurf/surfel.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nyqsurf {

// Everything a scene directory holds, validated.
struct SceneBundle {
  std::vector<Camera> cameras;
  std::vector<Vec3Image> images;
  std::vector<std::optional<ScalarImage>> depth;
  std::vector<std::optional<Vec3Image>> normal;
  SurfelField field;
  std::map<std::string, std::string> config;

  std::size_t views() const { return cameras.size(); }
  bool has_depth() const {
    for (const auto& d : depth)
      if (!d) return false;
    return !depth.empty();
  }
  bool has_normal() const {
    for (const auto& n : normal)
      if (!n) return false;
    return !normal.empty();
  }

  FitTargets targets() const { return FitTargets{images, depth, normal}; }
};

inline void validate(const SceneBundle& scene) {
  if (scene.cameras.size() != scene.images.size())
    throw std::invalid_argument("scene: " + std::to_string(scene.cameras.size()) + " cameras but " +
                                std::to_string(scene.images.size()) + " images");
  if (scene.depth.size() != scene.cameras.size() || scene.normal.size() != scene.cameras.size())
    throw std::invalid_argument("scene: depth/normal slots must match camera count");
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const Camera& cam = scene.cameras[i];
    validate(cam);
    const auto fits = [&](const auto& img) { return img.width() == cam.width && img.height() == cam.height; };
    if (!fits(scene.images[i]))
      throw std::invalid_argument("scene: image " + std::to_string(i) + " is " +
                                  std::to_string(scene.images[i].width()) + "x" +
                                  std::to_string(scene.images[i].height()) + ", camera declares " +
                                  std::to_string(cam.width) + "x" + std::to_string(cam.height));
    if (scene.depth[i] && !fits(*scene.depth[i]))
      throw std::invalid_argument("scene: depth " + std::to_string(i) + " does not match camera size");
    if (scene.normal[i] && !fits(*scene.normal[i]))
      throw std::invalid_argument("scene: normal " + std::to_string(i) + " does not match camera size");
  }
  for (std::size_t k = 0; k < scene.field.size(); ++k) {
    try {
      validate(scene.field.surfels[k], kStoredFrameTolerance);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("scene: surfel " + std::to_string(k) + ": " + e.what());
    }
  }
}

// One surfel per pixel with positive depth, in view-major row-major order.
// Each is fronto-parallel to its source camera with a half-pixel footprint.
inline SurfelField pixel_aligned_field(std::span<const Camera> cams, std::span<const ScalarImage> depth,
                                       std::span<const Vec3Image> colors = {}) {
  if (cams.size() != depth.size()) throw std::invalid_argument("pixel_aligned_field: view count mismatch");
  SurfelField field;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const Camera& cam = cams[i];
    const Vec3 tu = cam.rotation.row(0).transpose();
    const Vec3 tv = cam.rotation.row(1).transpose();
    for (int r = 0; r < cam.height; ++r) {
      for (int c = 0; c < cam.width; ++c) {
        const double d = depth[i].at(r, c);
        if (!(d > 0.0)) continue;
        const double s = pixel_aligned_scale(cam, d);
        const Rgb color = i < colors.size() ? colors[i].at(r, c) : Rgb::Constant(0.5);
        field.surfels.push_back(make_surfel(unproject({double(c), double(r), d}, cam), tu, tv, s, s, 1.0, color));
      }
    }
  }
  return field;
}

}  // namespace nyqsurf
