#pragma once

#include "nyqsurf/camera.hpp"
#include "nyqsurf/io/config.hpp"
#include "nyqsurf/io/netpbm.hpp"
#include "nyqsurf/io/ply.hpp"
#include "nyqsurf/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nyqsurf::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kSceneFormat = "nyqsurf-scene";

namespace detail {

inline double number_field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) throw FormatError(ctx + ": missing key '" + key + "'");
  if (!obj[key].is_number()) throw FormatError(ctx + ": key '" + key + "' must be a number");
  return obj[key].get<double>();
}

inline int int_field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) throw FormatError(ctx + ": missing key '" + key + "'");
  if (!obj[key].is_number_integer()) throw FormatError(ctx + ": key '" + key + "' must be an integer");
  return obj[key].get<int>();
}

inline std::vector<double> array_field(const json& obj, const char* key, std::size_t n, const std::string& ctx) {
  if (!obj.contains(key)) throw FormatError(ctx + ": missing key '" + key + "'");
  const json& a = obj[key];
  if (!a.is_array() || a.size() != n)
    throw FormatError(ctx + ": key '" + key + "' must be an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (const json& v : a) {
    if (!v.is_number()) throw FormatError(ctx + ": key '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": malformed JSON: " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline Camera camera_from_json(const json& obj, const std::string& ctx) {
  if (!obj.is_object()) throw FormatError(ctx + ": camera must be an object");
  Camera cam;
  cam.fx = detail::number_field(obj, "fx", ctx);
  cam.fy = detail::number_field(obj, "fy", ctx);
  cam.cx = detail::number_field(obj, "cx", ctx);
  cam.cy = detail::number_field(obj, "cy", ctx);
  cam.width = detail::int_field(obj, "width", ctx);
  cam.height = detail::int_field(obj, "height", ctx);
  const auto rot = detail::array_field(obj, "rotation", 9, ctx);
  const auto tr = detail::array_field(obj, "translation", 3, ctx);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cam.rotation(i, j) = rot[3 * i + j];
  cam.translation = Vec3(tr[0], tr[1], tr[2]);
  if (obj.contains("near")) cam.near = detail::number_field(obj, "near", ctx);
  try {
    validate(cam);
  } catch (const std::invalid_argument& e) {
    throw FormatError(ctx + ": " + e.what());
  }
  return cam;
}

inline json camera_to_json(const Camera& cam) {
  json rot = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot.push_back(cam.rotation(i, j));
  return json{{"fx", cam.fx},
              {"fy", cam.fy},
              {"cx", cam.cx},
              {"cy", cam.cy},
              {"width", cam.width},
              {"height", cam.height},
              {"rotation", rot},
              {"translation", {cam.translation.x(), cam.translation.y(), cam.translation.z()}},
              {"near", cam.near}};
}

inline std::vector<Camera> cameras_from_json(const json& arr, const std::string& name) {
  if (!arr.is_array()) throw FormatError(name + ": expected a JSON array of cameras");
  std::vector<Camera> cams;
  for (std::size_t i = 0; i < arr.size(); ++i)
    cams.push_back(camera_from_json(arr[i], name + ": camera " + std::to_string(i)));
  return cams;
}

inline std::vector<Camera> load_cameras(const fs::path& path) {
  return cameras_from_json(detail::read_json(path), path.string());
}

inline void save_cameras(const fs::path& path, std::span<const Camera> cams) {
  json arr = json::array();
  for (const Camera& c : cams) arr.push_back(camera_to_json(c));
  detail::write_text(path, arr.dump(2) + "\n");
}

// Scene directory layout is described by manifest.json:
//   {"format": "nyqsurf-scene", "cameras": "cameras.json",
//    "images": [...ppm], "depth": [...pfm | null], "normals": [...pfm | null],
//    "field": "field.ply", "config": "scene.cfg"}
// depth, normals, field and config are optional.
inline SceneBundle load_scene(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::is_directory(dir)) throw std::runtime_error("scene directory '" + dir.string() + "' does not exist");
  if (!fs::exists(manifest_path)) throw std::runtime_error("scene '" + dir.string() + "' has no " + kManifestName);
  const json m = detail::read_json(manifest_path);
  const std::string mname = manifest_path.string();
  if (!m.is_object()) throw FormatError(mname + ": manifest must be an object");
  if (m.value("format", std::string()) != kSceneFormat)
    throw FormatError(mname + ": 'format' must be \"" + kSceneFormat + "\"");

  const auto path_of = [&](const json& v, const std::string& what) {
    if (!v.is_string()) throw FormatError(mname + ": " + what + " must be a file name");
    return dir / v.get<std::string>();
  };
  const auto list_of = [&](const char* key) {
    if (!m.contains(key)) return json::array();
    if (!m[key].is_array()) throw FormatError(mname + ": '" + key + "' must be an array");
    return m[key];
  };

  SceneBundle scene;
  if (!m.contains("cameras")) throw FormatError(mname + ": missing key 'cameras'");
  scene.cameras = load_cameras(path_of(m["cameras"], "'cameras'"));
  const json images = list_of("images");
  for (std::size_t i = 0; i < images.size(); ++i)
    scene.images.push_back(load_ppm(path_of(images[i], "images[" + std::to_string(i) + "]")));
  if (scene.images.size() != scene.cameras.size())
    throw FormatError(mname + ": " + std::to_string(scene.cameras.size()) + " cameras but " +
                      std::to_string(scene.images.size()) + " images");

  const auto optional_list = [&](const char* key, auto load, auto& slots) {
    const json arr = list_of(key);
    if (!arr.empty() && arr.size() != scene.cameras.size())
      throw FormatError(mname + ": '" + key + "' lists " + std::to_string(arr.size()) + " files for " +
                        std::to_string(scene.cameras.size()) + " cameras");
    slots.resize(scene.cameras.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
      if (!arr[i].is_null()) slots[i] = load(path_of(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
  };
  optional_list("depth", [](const fs::path& p) { return load_pfm_scalar(p); }, scene.depth);
  optional_list("normals", [](const fs::path& p) { return load_pfm_vec3(p); }, scene.normal);

  if (m.contains("field") && !m["field"].is_null()) scene.field = load_ply(path_of(m["field"], "'field'"));
  if (m.contains("config") && !m["config"].is_null()) scene.config = load_config(path_of(m["config"], "'config'"));

  try {
    validate(scene);
  } catch (const std::invalid_argument& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  return scene;
}

inline void save_scene(const fs::path& dir, const SceneBundle& scene) {
  validate(scene);
  fs::create_directories(dir);
  json m;
  m["format"] = kSceneFormat;
  m["cameras"] = "cameras.json";
  save_cameras(dir / "cameras.json", scene.cameras);
  json images = json::array(), depth = json::array(), normals = json::array();
  bool any_depth = false, any_normal = false;
  for (std::size_t i = 0; i < scene.views(); ++i) {
    const std::string idx = std::to_string(i);
    images.push_back("image_" + idx + ".ppm");
    save_ppm(dir / images.back().get<std::string>(), scene.images[i]);
    if (scene.depth[i]) {
      any_depth = true;
      depth.push_back("depth_" + idx + ".pfm");
      save_pfm(dir / depth.back().get<std::string>(), *scene.depth[i]);
    } else {
      depth.push_back(nullptr);
    }
    if (scene.normal[i]) {
      any_normal = true;
      normals.push_back("normal_" + idx + ".pfm");
      save_pfm(dir / normals.back().get<std::string>(), *scene.normal[i]);
    } else {
      normals.push_back(nullptr);
    }
  }
  m["images"] = images;
  if (any_depth) m["depth"] = depth;
  if (any_normal) m["normals"] = normals;
  m["field"] = "field.ply";
  save_ply(dir / "field.ply", scene.field);
  if (!scene.config.empty()) {
    m["config"] = "scene.cfg";
    std::ostringstream cfg;
    write_config(cfg, scene.config);
    detail::write_text(dir / "scene.cfg", cfg.str());
  }
  detail::write_text(dir / kManifestName, m.dump(2) + "\n");
}

}  // namespace nyqsurf::io
