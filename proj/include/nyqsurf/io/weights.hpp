#pragma once

#include "nyqsurf/attention.hpp"
#include "nyqsurf/io/scene_io.hpp"
#include "nyqsurf/pipeline.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nyqsurf::io {

inline constexpr const char* kWeightsFormat = "nyqsurf-weights";

// Weight file: a JSON manifest plus a flat little-endian float32 binary.
//   {"format": "nyqsurf-weights", "dtype": "float32", "binary": "weights.bin",
//    "channels": C, "hidden": H,
//    "tensors": [{"name": "w_q", "shape": [C, C], "offset": 0}, ...]}
// Offsets count float32 elements. Matrices are row-major. Required tensors:
// w_q, w_k, w_v [C,C], ffn_w1 [H,C], ffn_b1 [H], ffn_w2 [C,H], ffn_b2 [C].
// Optional heads: attr_w [9,C] with attr_b [9]; depth_w [C] with depth_b [1].
struct WeightFile {
  AttentionWeights attention;
  std::optional<MatX> attr_w;
  std::optional<VecX> attr_b;
  std::optional<VecX> depth_w;
  std::optional<double> depth_b;
};

namespace detail {

struct TensorSpec {
  std::vector<Eigen::Index> shape;
  std::size_t offset = 0;
  std::size_t count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

inline MatX to_matrix(const std::vector<float>& data, const TensorSpec& t) {
  const Eigen::Index rows = t.shape[0];
  const Eigen::Index cols = t.shape.size() > 1 ? t.shape[1] : 1;
  MatX m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[t.offset + static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace detail

inline WeightFile load_weights(const fs::path& manifest_path) {
  const std::string name = manifest_path.string();
  const json m = detail::read_json(manifest_path);
  if (!m.is_object() || m.value("format", std::string()) != kWeightsFormat)
    throw FormatError(name + ": 'format' must be \"" + kWeightsFormat + "\"");
  if (m.value("dtype", std::string()) != "float32") throw FormatError(name + ": 'dtype' must be \"float32\"");
  if (!m.contains("binary") || !m["binary"].is_string()) throw FormatError(name + ": missing 'binary'");
  const int channels = detail::int_field(m, "channels", name);
  const int hidden = detail::int_field(m, "hidden", name);
  if (channels < 1 || hidden < 1) throw FormatError(name + ": channels and hidden must be >= 1");

  const fs::path bin_path = manifest_path.parent_path() / m["binary"].get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read '" + bin_path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw FormatError(bin_path.string() + ": size is not a multiple of 4 bytes");
  std::vector<float> data(bytes.size() / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t word = 0;
    std::memcpy(&word, bytes.data() + 4 * i, 4);
    data[i] = std::bit_cast<float>(detail::to_little(word));
  }

  std::map<std::string, detail::TensorSpec> tensors;
  if (!m.contains("tensors") || !m["tensors"].is_array()) throw FormatError(name + ": missing 'tensors' array");
  for (const json& t : m["tensors"]) {
    if (!t.is_object() || !t.contains("name") || !t["name"].is_string())
      throw FormatError(name + ": tensor entry without a name");
    const std::string tname = t["name"].get<std::string>();
    const std::string ctx = name + ": tensor '" + tname + "'";
    detail::TensorSpec spec;
    if (!t.contains("shape") || !t["shape"].is_array() || t["shape"].empty() || t["shape"].size() > 2)
      throw FormatError(ctx + ": shape must have 1 or 2 dimensions");
    for (const json& d : t["shape"]) {
      if (!d.is_number_integer() || d.get<long long>() < 1) throw FormatError(ctx + ": bad dimension");
      spec.shape.push_back(d.get<Eigen::Index>());
    }
    const json& off = t.value("offset", json());
    if (!off.is_number_integer() || off.get<long long>() < 0) throw FormatError(ctx + ": bad offset");
    spec.offset = off.get<std::size_t>();
    if (spec.offset + spec.count() > data.size())
      throw FormatError(ctx + ": extends past the end of '" + bin_path.string() + "'");
    if (!tensors.emplace(tname, spec).second) throw FormatError(ctx + ": duplicate tensor");
  }

  const auto get = [&](const std::string& tname, std::vector<Eigen::Index> shape, bool required) -> std::optional<MatX> {
    const auto it = tensors.find(tname);
    if (it == tensors.end()) {
      if (required) throw FormatError(name + ": missing tensor '" + tname + "'");
      return std::nullopt;
    }
    auto actual = it->second.shape;
    if (actual.size() == 1 && shape.size() == 2 && shape[1] == 1) actual.push_back(1);
    if (shape.size() == 1) shape.push_back(1);
    if (actual.size() == 1) actual.push_back(1);
    if (actual != shape)
      throw FormatError(name + ": tensor '" + tname + "' has shape [" + std::to_string(actual[0]) + "," +
                        std::to_string(actual[1]) + "], expected [" + std::to_string(shape[0]) + "," +
                        std::to_string(shape[1]) + "]");
    return detail::to_matrix(data, it->second);
  };

  WeightFile wf;
  AttentionWeights& a = wf.attention;
  a.w_q = *get("w_q", {channels, channels}, true);
  a.w_k = *get("w_k", {channels, channels}, true);
  a.w_v = *get("w_v", {channels, channels}, true);
  a.ffn_w1 = *get("ffn_w1", {hidden, channels}, true);
  a.ffn_b1 = get("ffn_b1", {hidden}, true)->col(0);
  a.ffn_w2 = *get("ffn_w2", {channels, hidden}, true);
  a.ffn_b2 = get("ffn_b2", {channels}, true)->col(0);
  validate(a);

  if (auto w = get("attr_w", {LinearAttrHead::kOutputs, channels}, false)) {
    const auto b = get("attr_b", {LinearAttrHead::kOutputs}, true);
    wf.attr_w = *w;
    wf.attr_b = b->col(0);
  }
  if (auto w = get("depth_w", {channels}, false)) {
    const auto b = get("depth_b", {1}, true);
    wf.depth_w = w->col(0);
    wf.depth_b = (*b)(0, 0);
  }
  return wf;
}

inline void save_weights(const fs::path& manifest_path, const WeightFile& wf,
                         const std::string& binary_name = "weights.bin") {
  validate(wf.attention);
  std::vector<float> data;
  json tensors = json::array();
  const auto add = [&](const std::string& tname, const MatX& m, bool vector) {
    json shape = vector ? json::array({m.rows()}) : json::array({m.rows(), m.cols()});
    tensors.push_back({{"name", tname}, {"shape", shape}, {"offset", data.size()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(static_cast<float>(m(r, c)));
  };
  const AttentionWeights& a = wf.attention;
  add("w_q", a.w_q, false);
  add("w_k", a.w_k, false);
  add("w_v", a.w_v, false);
  add("ffn_w1", a.ffn_w1, false);
  add("ffn_b1", a.ffn_b1, true);
  add("ffn_w2", a.ffn_w2, false);
  add("ffn_b2", a.ffn_b2, true);
  if (wf.attr_w && wf.attr_b) {
    add("attr_w", *wf.attr_w, false);
    add("attr_b", *wf.attr_b, true);
  }
  if (wf.depth_w && wf.depth_b) {
    add("depth_w", *wf.depth_w, true);
    add("depth_b", MatX::Constant(1, 1, *wf.depth_b), true);
  }

  json m{{"format", kWeightsFormat},   {"dtype", "float32"},     {"binary", binary_name},
         {"channels", a.channels()},   {"hidden", a.hidden()},   {"tensors", tensors}};
  const fs::path bin_path = manifest_path.parent_path() / binary_name;
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write '" + bin_path.string() + "'");
  for (float f : data) {
    const std::uint32_t word = detail::to_little(std::bit_cast<std::uint32_t>(f));
    bin.write(reinterpret_cast<const char*>(&word), 4);
  }
  if (!bin) throw std::runtime_error("write failed for '" + bin_path.string() + "'");
  detail::write_text(manifest_path, m.dump(2) + "\n");
}

}  // namespace nyqsurf::io
