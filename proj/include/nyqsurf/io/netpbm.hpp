#pragma once

#include "nyqsurf/image.hpp"
#include "nyqsurf/io/ply.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace nyqsurf::io {

namespace detail {

inline std::string next_token(std::istream& in, const std::string& name) {
  std::string tok;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(ch);
  }
  if (tok.empty()) throw FormatError(name + ": truncated header");
  return tok;
}

inline int parse_dim(const std::string& tok, const std::string& name) {
  const double v = parse_number(tok, name);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e8) throw FormatError(name + ": bad image dimension '" + tok + "'");
  return static_cast<int>(v);
}

inline std::uint32_t swap_bytes(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

inline std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return swap_bytes(v);
  return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return in;
}

}  // namespace detail

inline std::uint8_t to_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

// Binary 8-bit PPM (P6).
inline void write_ppm(std::ostream& out, const Vec3Image& img) {
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<char> bytes(img.size() * 3);
  for (std::size_t p = 0; p < img.size(); ++p)
    for (int c = 0; c < 3; ++c) bytes[3 * p + c] = static_cast<char>(to_byte(img[p][c]));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Vec3Image read_ppm(std::istream& in, const std::string& name = "ppm") {
  if (detail::next_token(in, name) != "P6") throw FormatError(name + ": not a binary PPM (P6)");
  const int w = detail::parse_dim(detail::next_token(in, name), name);
  const int h = detail::parse_dim(detail::next_token(in, name), name);
  if (detail::next_token(in, name) != "255") throw FormatError(name + ": only maxval 255 is supported");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw FormatError(name + ": truncated pixel data");
  Vec3Image img(w, h);
  for (std::size_t p = 0; p < img.size(); ++p)
    img[p] = Eigen::Vector3d(bytes[3 * p], bytes[3 * p + 1], bytes[3 * p + 2]) / 255.0;
  return img;
}

namespace detail {

// PFM stores rows bottom-to-top as little-endian float32 (negative scale).
template <int Channels, typename Get>
void write_pfm(std::ostream& out, int w, int h, Get get) {
  out << (Channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n-1.0\n";
  std::vector<std::uint32_t> words(static_cast<std::size_t>(w) * h * Channels);
  std::size_t i = 0;
  for (int r = h - 1; r >= 0; --r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < Channels; ++ch)
        words[i++] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(get(r, c, ch))));
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
}

template <int Channels, typename Set>
void read_pfm(std::istream& in, const std::string& name, int& w, int& h, Set set, auto alloc) {
  const std::string magic = next_token(in, name);
  if (magic != (Channels == 3 ? "PF" : "Pf"))
    throw FormatError(name + ": expected " + (Channels == 3 ? "PF" : "Pf") + " header, got '" + magic + "'");
  w = parse_dim(next_token(in, name), name);
  h = parse_dim(next_token(in, name), name);
  const double scale = parse_number(next_token(in, name), name);
  if (scale == 0.0) throw FormatError(name + ": zero scale");
  const bool little = scale < 0.0;
  alloc(w, h);
  std::vector<std::uint32_t> words(static_cast<std::size_t>(w) * h * Channels);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(words.size() * 4)) throw FormatError(name + ": truncated pixel data");
  std::size_t i = 0;
  for (int r = h - 1; r >= 0; --r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < Channels; ++ch) {
        std::uint32_t word = words[i++];
        const bool native_little = std::endian::native == std::endian::little;
        if (little != native_little) word = swap_bytes(word);
        set(r, c, ch, static_cast<double>(std::bit_cast<float>(word)));
      }
}

}  // namespace detail

inline void write_pfm(std::ostream& out, const ScalarImage& img) {
  detail::write_pfm<1>(out, img.width(), img.height(), [&](int r, int c, int) { return img.at(r, c); });
}

inline void write_pfm(std::ostream& out, const Vec3Image& img) {
  detail::write_pfm<3>(out, img.width(), img.height(), [&](int r, int c, int ch) { return img.at(r, c)[ch]; });
}

inline ScalarImage read_pfm_scalar(std::istream& in, const std::string& name = "pfm") {
  ScalarImage img;
  int w = 0, h = 0;
  detail::read_pfm<1>(in, name, w, h, [&](int r, int c, int, double v) { img.at(r, c) = v; },
                      [&](int ww, int hh) { img = ScalarImage(ww, hh); });
  return img;
}

inline Vec3Image read_pfm_vec3(std::istream& in, const std::string& name = "pfm") {
  Vec3Image img;
  int w = 0, h = 0;
  detail::read_pfm<3>(in, name, w, h, [&](int r, int c, int ch, double v) { img.at(r, c)[ch] = v; },
                      [&](int ww, int hh) { img = Vec3Image(ww, hh, Eigen::Vector3d::Zero()); });
  return img;
}

inline void save_ppm(const std::filesystem::path& p, const Vec3Image& img) {
  auto out = detail::open_out(p);
  write_ppm(out, img);
}
inline Vec3Image load_ppm(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_ppm(in, p.string());
}
inline void save_pfm(const std::filesystem::path& p, const ScalarImage& img) {
  auto out = detail::open_out(p);
  write_pfm(out, img);
}
inline void save_pfm(const std::filesystem::path& p, const Vec3Image& img) {
  auto out = detail::open_out(p);
  write_pfm(out, img);
}
inline ScalarImage load_pfm_scalar(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_pfm_scalar(in, p.string());
}
inline Vec3Image load_pfm_vec3(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_pfm_vec3(in, p.string());
}

}  // namespace nyqsurf::io
