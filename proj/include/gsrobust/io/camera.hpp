// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <string_view>

#include "gsrobust/cloud.hpp"
#include "gsrobust/error.hpp"

namespace gsrobust {

/// Reference point used for per-Gaussian depths.
struct CameraDescriptor {
  Vec3 position = Vec3::Zero();
  std::string label;
};

}  // namespace gsrobust

namespace gsrobust::io {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Parses three numbers separated by whitespace and/or commas.
inline Vec3 parse_vec3(std::string_view text, ErrorKind kind = ErrorKind::format) {
  std::string buf(text);
  for (char& c : buf)
    if (c == ',') c = ' ';
  std::istringstream in(buf);
  Vec3 v;
  if (!(in >> v[0] >> v[1] >> v[2])) fail(kind, "expected three numbers, got '" + std::string(text) + "'");
  std::string extra;
  if (in >> extra) fail(kind, "expected three numbers, got '" + std::string(text) + "'");
  if (!v.allFinite()) fail(ErrorKind::data, "non-finite component in '" + std::string(text) + "'");
  return v;
}

/// Reads `key = value` lines; `position = x y z` is required, `label` optional.
inline CameraDescriptor parse_camera_config(std::string_view text) {
  CameraDescriptor cam;
  bool have_position = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::format, "camera config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "position") {
      cam.position = parse_vec3(value);
      have_position = true;
    } else if (key == "label") {
      cam.label = std::string(value);
    }
  }
  if (!have_position) fail(ErrorKind::format, "camera config has no 'position' entry");
  return cam;
}

}  // namespace gsrobust::io
