// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Binary PLY reader/writer for splat models in the layout produced by the
// reference Gaussian-splatting exporter:
//
//   x y z nx ny nz f_dc_0..2 f_rest_0..(R-1) opacity scale_0..2 rot_0..3
//
// all as 32-bit floats. Opacity is stored as a logit, scales as logarithms,
// and rotations as unnormalized (w, x, y, z) quaternions.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gsrobust/cloud.hpp"
#include "gsrobust/error.hpp"
#include "gsrobust/io/file.hpp"

namespace gsrobust::io {

namespace ply_detail {

enum class ScalarType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

inline std::optional<ScalarType> scalar_type_from_name(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::int8;
  if (name == "uchar" || name == "uint8") return ScalarType::uint8;
  if (name == "short" || name == "int16") return ScalarType::int16;
  if (name == "ushort" || name == "uint16") return ScalarType::uint16;
  if (name == "int" || name == "int32") return ScalarType::int32;
  if (name == "uint" || name == "uint32") return ScalarType::uint32;
  if (name == "float" || name == "float32") return ScalarType::float32;
  if (name == "double" || name == "float64") return ScalarType::float64;
  return std::nullopt;
}

inline std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::int8:
    case ScalarType::uint8: return 1;
    case ScalarType::int16:
    case ScalarType::uint16: return 2;
    case ScalarType::int32:
    case ScalarType::uint32:
    case ScalarType::float32: return 4;
    case ScalarType::float64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::float32;
  std::size_t offset = 0;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  std::size_t stride = 0;

  const Property* find(std::string_view prop) const {
    for (const auto& p : properties)
      if (p.name == prop) return &p;
    return nullptr;
  }
};

struct Header {
  bool little_endian = true;
  std::vector<Element> elements;
  std::size_t data_offset = 0;
};

inline std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) words.push_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

inline Header parse_header(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!text.starts_with("ply\n") && !text.starts_with("ply\r\n"))
    fail(ErrorKind::format, "missing 'ply' magic line");

  Header header;
  bool saw_format = false;
  std::size_t pos = 0;
  while (true) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) fail(ErrorKind::format, "PLY header is not terminated by 'end_header'");
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;

    const auto words = split_words(line);
    if (words.empty() || words[0] == "ply" || words[0] == "comment" || words[0] == "obj_info") continue;
    if (words[0] == "end_header") break;

    if (words[0] == "format") {
      if (words.size() < 3) fail(ErrorKind::format, "malformed 'format' line");
      if (words[1] == "binary_little_endian") header.little_endian = true;
      else if (words[1] == "binary_big_endian") header.little_endian = false;
      else fail(ErrorKind::format, "unsupported PLY encoding '" + std::string(words[1]) + "' (binary only)");
      saw_format = true;
    } else if (words[0] == "element") {
      if (words.size() != 3) fail(ErrorKind::format, "malformed 'element' line");
      Element el;
      el.name = std::string(words[1]);
      std::uint64_t count = 0;
      const auto res = std::from_chars(words[2].data(), words[2].data() + words[2].size(), count);
      if (res.ec != std::errc() || res.ptr != words[2].data() + words[2].size())
        fail(ErrorKind::format, "bad element count for '" + el.name + "'");
      el.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(el));
    } else if (words[0] == "property") {
      if (header.elements.empty()) fail(ErrorKind::format, "property declared before any element");
      Element& el = header.elements.back();
      if (words.size() >= 2 && words[1] == "list")
        fail(ErrorKind::format, "list property in element '" + el.name + "' is not supported");
      if (words.size() != 3) fail(ErrorKind::format, "malformed 'property' line");
      const auto type = scalar_type_from_name(words[1]);
      if (!type) fail(ErrorKind::format, "unknown property type '" + std::string(words[1]) + "'");
      el.properties.push_back(Property{std::string(words[2]), *type, el.stride});
      el.stride += scalar_size(*type);
    } else {
      fail(ErrorKind::format, "unrecognized header line '" + std::string(line) + "'");
    }
  }
  if (!saw_format) fail(ErrorKind::format, "missing 'format' line");
  header.data_offset = pos;
  return header;
}

template <typename T>
T load(const std::uint8_t* p, bool little_endian) {
  std::array<std::uint8_t, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (little_endian != (std::endian::native == std::endian::little)) std::reverse(buf.begin(), buf.end());
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

inline double read_scalar(const std::uint8_t* p, ScalarType t, bool le) {
  switch (t) {
    case ScalarType::int8: return load<std::int8_t>(p, le);
    case ScalarType::uint8: return load<std::uint8_t>(p, le);
    case ScalarType::int16: return load<std::int16_t>(p, le);
    case ScalarType::uint16: return load<std::uint16_t>(p, le);
    case ScalarType::int32: return load<std::int32_t>(p, le);
    case ScalarType::uint32: return load<std::uint32_t>(p, le);
    case ScalarType::float32: return load<float>(p, le);
    case ScalarType::float64: return load<double>(p, le);
  }
  return 0.0;
}

inline void append_float_le(Bytes& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xffu));
}

// Largest double strictly below one; keeps activated opacities inside (0,1)
// when a stored logit saturates the logistic function.
inline constexpr double kOpacityCeiling = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

}  // namespace ply_detail

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Applies the exporter's activations to one on-disk record.
inline GaussianPrimitive activate(const RawSplatRecord& raw) {
  GaussianPrimitive p;
  p.position = raw.position;
  p.opacity = std::clamp(logistic(raw.raw_opacity), std::numeric_limits<double>::min(), ply_detail::kOpacityCeiling);
  p.scale = raw.raw_scale.array().exp().cwiseMax(std::numeric_limits<double>::min());
  const double n = quaternion_norm(raw.raw_rotation);
  for (int i = 0; i < 4; ++i) p.rotation[i] = raw.raw_rotation[i] / n;
  p.dc_color = raw.dc_color;
  p.rest_color = raw.rest_color;
  return p;
}

/// Parses a binary PLY splat model and returns the activated cloud.
inline GaussianCloud parse_splat_ply(std::span<const std::uint8_t> bytes, std::string source_path = {}) {
  using namespace ply_detail;
  const Header header = parse_header(bytes);

  std::size_t offset = header.data_offset;
  const Element* vertex = nullptr;
  std::size_t vertex_offset = 0;
  for (const auto& el : header.elements) {
    if (el.name == "vertex") {
      vertex = &el;
      vertex_offset = offset;
    }
    offset += el.count * el.stride;
  }
  if (!vertex) fail(ErrorKind::format, "no 'vertex' element in header");

  auto required = [&](std::string_view name) -> std::size_t {
    const Property* p = vertex->find(name);
    if (!p) fail(ErrorKind::format, "vertex element is missing required property '" + std::string(name) + "'");
    if (p->type != ScalarType::float32)
      fail(ErrorKind::format, "required property '" + std::string(name) + "' must be a 32-bit float");
    return p->offset;
  };
  const std::array<std::size_t, 3> pos_off{required("x"), required("y"), required("z")};
  const std::size_t opacity_off = required("opacity");
  const std::array<std::size_t, 3> scale_off{required("scale_0"), required("scale_1"), required("scale_2")};
  const std::array<std::size_t, 4> rot_off{required("rot_0"), required("rot_1"), required("rot_2"), required("rot_3")};

  std::array<const Property*, 3> dc{vertex->find("f_dc_0"), vertex->find("f_dc_1"), vertex->find("f_dc_2")};
  std::vector<const Property*> rest;
  for (std::size_t r = 0;; ++r) {
    const Property* p = vertex->find("f_rest_" + std::to_string(r));
    if (!p) break;
    rest.push_back(p);
  }

  if (vertex->count == 0) fail(ErrorKind::format, "vertex element is empty");
  if (offset > bytes.size() || vertex_offset + vertex->count * vertex->stride > bytes.size())
    fail(ErrorKind::format, "PLY body is truncated: expected " + std::to_string(offset - header.data_offset) +
                                " bytes of element data");

  const bool le = header.little_endian;
  GaussianCloud cloud;
  cloud.source_path = std::move(source_path);
  cloud.primitives.reserve(vertex->count);
  for (std::size_t i = 0; i < vertex->count; ++i) {
    const std::uint8_t* rec = bytes.data() + vertex_offset + i * vertex->stride;
    RawSplatRecord raw;
    for (int k = 0; k < 3; ++k) raw.position[k] = read_scalar(rec + pos_off[k], ScalarType::float32, le);
    raw.raw_opacity = read_scalar(rec + opacity_off, ScalarType::float32, le);
    for (int k = 0; k < 3; ++k) raw.raw_scale[k] = read_scalar(rec + scale_off[k], ScalarType::float32, le);
    for (int k = 0; k < 4; ++k) raw.raw_rotation[k] = read_scalar(rec + rot_off[k], ScalarType::float32, le);
    for (int k = 0; k < 3; ++k) raw.dc_color[k] = dc[k] ? read_scalar(rec + dc[k]->offset, dc[k]->type, le) : 0.0;
    raw.rest_color.reserve(rest.size());
    for (const Property* p : rest) raw.rest_color.push_back(static_cast<float>(read_scalar(rec + p->offset, p->type, le)));

    const bool finite = raw.position.allFinite() && std::isfinite(raw.raw_opacity) && raw.raw_scale.allFinite() &&
                        std::all_of(raw.raw_rotation.begin(), raw.raw_rotation.end(),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) fail(ErrorKind::data, "record " + std::to_string(i) + ": non-finite required field");
    if (quaternion_norm(raw.raw_rotation) == 0.0)
      fail(ErrorKind::data, "record " + std::to_string(i) + ": zero-norm rotation quaternion");
    cloud.primitives.push_back(activate(raw));
  }
  return cloud;
}

/// Serializes a cloud in the exporter layout (inverse activations applied).
inline Bytes write_splat_ply(const GaussianCloud& cloud) {
  using namespace ply_detail;
  validate_cloud(cloud);
  const std::size_t rest_count = cloud.primitives.front().rest_color.size();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.primitives[i];
    if (p.rest_color.size() != rest_count)
      fail(ErrorKind::invariant, "primitive " + std::to_string(i) + ": inconsistent f_rest length");
    if (p.opacity <= 0.0 || p.opacity >= 1.0)
      fail(ErrorKind::range, "primitive " + std::to_string(i) + ": opacity must lie strictly inside (0,1)");
  }

  std::ostringstream hdr;
  hdr << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
    hdr << "property float " << name << "\n";
  for (std::size_t r = 0; r < rest_count; ++r) hdr << "property float f_rest_" << r << "\n";
  for (const char* name : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    hdr << "property float " << name << "\n";
  hdr << "end_header\n";

  const std::string text = hdr.str();
  Bytes out(text.begin(), text.end());
  out.reserve(out.size() + cloud.size() * 4 * (17 + rest_count));
  for (const auto& p : cloud.primitives) {
    for (int k = 0; k < 3; ++k) append_float_le(out, static_cast<float>(p.position[k]));
    for (int k = 0; k < 3; ++k) append_float_le(out, 0.0f);
    for (int k = 0; k < 3; ++k) append_float_le(out, static_cast<float>(p.dc_color[k]));
    for (float v : p.rest_color) append_float_le(out, v);
    append_float_le(out, static_cast<float>(logit(p.opacity)));
    for (int k = 0; k < 3; ++k) append_float_le(out, static_cast<float>(std::log(p.scale[k])));
    for (int k = 0; k < 4; ++k) append_float_le(out, static_cast<float>(p.rotation[k]));
  }
  return out;
}

inline GaussianCloud load_splat_ply(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_splat_ply(bytes, path.string());
}

}  // namespace gsrobust::io
