#pragma once

#include "nyqsurf/surfel.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace nyqsurf::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that reads back to the same float32.
inline std::string format_float(double value) {
  const float f = static_cast<float>(value);
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), f);
  return std::string(buf.data(), res.ptr);
}

inline constexpr std::array<const char*, 15> kSurfelProperties = {
    "x", "y", "z", "tu_x", "tu_y", "tu_z", "tv_x", "tv_y", "tv_z",
    "s_u", "s_v", "opacity", "red", "green", "blue"};

// ASCII PLY, one vertex per surfel. Annotations present on the field are
// written as extra nu_hat / nyquist_ratio properties.
inline void write_ply(std::ostream& out, const SurfelField& field) {
  out << "ply\nformat ascii 1.0\ncomment 2D Gaussian surfels\n";
  out << "element vertex " << field.size() << "\n";
  for (const char* name : kSurfelProperties) out << "property float " << name << "\n";
  if (field.sampling_rate) out << "property float nu_hat\n";
  if (field.nyquist_ratio) out << "property float nyquist_ratio\n";
  out << "end_header\n";
  for (std::size_t k = 0; k < field.size(); ++k) {
    const Surfel& s = field.surfels[k];
    const std::array<double, 15> v = {s.center.x(), s.center.y(), s.center.z(), s.t_u.x(), s.t_u.y(),
                                      s.t_u.z(),    s.t_v.x(),    s.t_v.y(),    s.t_v.z(), s.s_u,
                                      s.s_v,        s.opacity,    s.color.x(),  s.color.y(), s.color.z()};
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_float(v[i]);
    if (field.sampling_rate) out << " " << format_float((*field.sampling_rate)[k]);
    if (field.nyquist_ratio) out << " " << format_float((*field.nyquist_ratio)[k]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_ply: stream error");
}

inline double parse_number(const std::string& token, const std::string& context) {
  if (token == "nan" || token == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (token == "inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = token.data();
  if (!token.empty() && token.front() == '+') ++first;
  const auto res = std::from_chars(first, token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw FormatError(context + ": malformed number '" + token + "'");
  return v;
}

inline SurfelField read_ply(std::istream& in, const std::string& name = "ply") {
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw FormatError(name + ": missing 'ply' magic");
  std::size_t count = 0;
  bool have_vertex = false;
  bool in_vertex = false;
  std::vector<std::string> props;
  while (true) {
    if (!std::getline(in, line)) throw FormatError(name + ": header not terminated");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw FormatError(name + ": only ascii PLY is supported, got '" + fmt + "'");
    } else if (word == "element") {
      std::string elem;
      long long n = -1;
      ls >> elem >> n;
      in_vertex = elem == "vertex";
      if (in_vertex) {
        if (n < 0) throw FormatError(name + ": bad vertex count");
        count = static_cast<std::size_t>(n);
        have_vertex = true;
      } else if (n != 0) {
        throw FormatError(name + ": unsupported element '" + elem + "'");
      }
    } else if (word == "property") {
      std::string type, prop;
      ls >> type >> prop;
      if (type == "list") throw FormatError(name + ": list properties are not supported");
      if (type != "float" && type != "double" && type != "float32" && type != "float64")
        throw FormatError(name + ": property '" + prop + "' must be float, got '" + type + "'");
      if (in_vertex) props.push_back(prop);
    } else if (word != "comment" && word != "obj_info" && !word.empty()) {
      throw FormatError(name + ": unexpected header line '" + line + "'");
    }
  }
  if (!have_vertex) throw FormatError(name + ": no vertex element");

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < props.size(); ++i) col[props[i]] = i;
  std::array<std::size_t, 15> idx{};
  for (std::size_t i = 0; i < kSurfelProperties.size(); ++i) {
    auto it = col.find(kSurfelProperties[i]);
    if (it == col.end())
      throw FormatError(name + ": missing required property '" + kSurfelProperties[i] + "'");
    idx[i] = it->second;
  }
  const auto nu_col = col.find("nu_hat");
  const auto ratio_col = col.find("nyquist_ratio");

  SurfelField field;
  field.surfels.resize(count);
  std::vector<double> rates, ratios;
  std::vector<std::string> tokens(props.size());
  for (std::size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line)) throw FormatError(name + ": expected " + std::to_string(count) + " vertices, got " + std::to_string(k));
    std::istringstream ls(line);
    for (auto& t : tokens)
      if (!(ls >> t)) throw FormatError(name + ": vertex " + std::to_string(k) + " has too few values");
    const auto get = [&](std::size_t i) {
      return static_cast<double>(static_cast<float>(parse_number(tokens[i], name + ": vertex " + std::to_string(k))));
    };
    Surfel& s = field.surfels[k];
    s.center = {get(idx[0]), get(idx[1]), get(idx[2])};
    s.t_u = {get(idx[3]), get(idx[4]), get(idx[5])};
    s.t_v = {get(idx[6]), get(idx[7]), get(idx[8])};
    s.s_u = get(idx[9]);
    s.s_v = get(idx[10]);
    s.opacity = get(idx[11]);
    s.color = {get(idx[12]), get(idx[13]), get(idx[14])};
    if (nu_col != col.end()) rates.push_back(get(nu_col->second));
    if (ratio_col != col.end()) ratios.push_back(get(ratio_col->second));
  }
  if (nu_col != col.end()) field.set_sampling_rate(std::move(rates));
  if (ratio_col != col.end()) field.set_nyquist_ratio(std::move(ratios));
  return field;
}

inline void save_ply(const std::filesystem::path& path, const SurfelField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_ply(out, field);
}

inline SurfelField load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return read_ply(in, path.string());
}

}  // namespace nyqsurf::io
