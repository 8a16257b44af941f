#pragma once

#include "nyqsurf/adaptation.hpp"
#include "nyqsurf/camera.hpp"
#include "nyqsurf/io/ply.hpp"
#include "nyqsurf/losses.hpp"
#include "nyqsurf/nyquist.hpp"
#include "nyqsurf/render.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace nyqsurf::io {

// Scene configuration file: one `key = value` per line, `#` starts a comment.
//
//   adaptation.mode     paper | convolution          (default paper)
//   adaptation.s        filter hyperparameter > 0    (default 1)
//   rate.mode           area | per_axis              (default area)
//   footprint.epsilon   Gaussian threshold in (0,1)  (default e^-2)
//   histogram.bins      integer >= 1                 (default 64)
//   render.background   r,g,b in [0,1]               (default 0,0,0)
//   loss.lambda_geo / loss.lambda_align / loss.lambda_d / loss.lambda_n / loss.lambda_lpips
//   fit.iterations      integer >= 0                 (default 500)
//   fit.step            initial step length > 0      (default 0.05)
//   pipeline.bundle_cap integer >= 1                 (default 1024)
//   scene.kind          informational, written by synth
using ConfigMap = std::map<std::string, std::string>;

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "adaptation.mode", "adaptation.s",      "rate.mode",         "footprint.epsilon",
      "histogram.bins",  "render.background", "loss.lambda_geo",   "loss.lambda_align",
      "loss.lambda_d",   "loss.lambda_n",     "loss.lambda_lpips", "fit.iterations",
      "fit.step",        "pipeline.bundle_cap", "scene.kind"};
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config(std::istream& in, const std::string& name = "config") {
  ConfigMap cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_config_keys().contains(key))
      throw FormatError(name + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (cfg.contains(key)) throw FormatError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg[key] = value;
  }
  return cfg;
}

inline void write_config(std::ostream& out, const ConfigMap& cfg) {
  for (const auto& [k, v] : cfg) out << k << " = " << v << "\n";
}

inline ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return parse_config(in, path.string());
}

inline double config_number(const ConfigMap& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_number(it->second, "config key '" + key + "'");
}

inline int config_int(const ConfigMap& cfg, const std::string& key, int fallback) {
  const double v = config_number(cfg, key, fallback);
  if (v != std::floor(v)) throw FormatError("config key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

inline AdaptationConfig adaptation_from(const ConfigMap& cfg) {
  AdaptationConfig out;
  if (auto it = cfg.find("adaptation.mode"); it != cfg.end()) out.mode = parse_adaptation_mode(it->second);
  out.s = config_number(cfg, "adaptation.s", out.s);
  if (!(out.s > 0.0)) throw FormatError("config key 'adaptation.s' must be positive");
  return out;
}

inline RateMode rate_mode_from(const ConfigMap& cfg) {
  const auto it = cfg.find("rate.mode");
  if (it == cfg.end() || it->second == "area") return RateMode::Area;
  if (it->second == "per_axis") return RateMode::PerAxis;
  throw FormatError("config key 'rate.mode' must be area|per_axis");
}

inline Rgb parse_rgb(const std::string& text, const std::string& context) {
  std::stringstream ss(text);
  std::string part;
  Rgb out;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) throw FormatError(context + ": expected r,g,b");
    out[i++] = parse_number(trim(part), context);
  }
  if (i != 3) throw FormatError(context + ": expected r,g,b");
  return out;
}

inline Rgb background_from(const ConfigMap& cfg) {
  const auto it = cfg.find("render.background");
  return it == cfg.end() ? Rgb::Zero() : parse_rgb(it->second, "config key 'render.background'");
}

inline double epsilon_from(const ConfigMap& cfg) {
  const double eps = config_number(cfg, "footprint.epsilon", kDefaultFootprintEpsilon);
  if (!(eps > 0.0 && eps < 1.0)) throw FormatError("config key 'footprint.epsilon' must lie in (0,1)");
  return eps;
}

inline LossWeights loss_weights_from(const ConfigMap& cfg) {
  LossWeights w;
  w.lambda_geo = config_number(cfg, "loss.lambda_geo", w.lambda_geo);
  w.lambda_align = config_number(cfg, "loss.lambda_align", w.lambda_align);
  w.lambda_d = config_number(cfg, "loss.lambda_d", w.lambda_d);
  w.lambda_n = config_number(cfg, "loss.lambda_n", w.lambda_n);
  w.lambda_lpips = config_number(cfg, "loss.lambda_lpips", w.lambda_lpips);
  validate(w);
  return w;
}

}  // namespace nyqsurf::io
