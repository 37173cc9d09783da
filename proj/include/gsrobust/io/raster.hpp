// SPDX-FileCopyrightText: 2026 gsrobust authors
// SPDX-License-Identifier: Apache-2.0

// Depth maps and images: PFM (float), binary PGM (8/16-bit) and PPM (8-bit).

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsrobust/error.hpp"
#include "gsrobust/io/file.hpp"

namespace gsrobust {

/// Row-major scalar depth grid; larger values are farther.
struct DepthMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
  std::size_t pixel_count() const noexcept { return width * height; }
};

/// Row-major, channel-interleaved image with values in [0,1].
struct ImagePlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<double> values;

  std::size_t pixel_count() const noexcept { return width * height; }
  double at(std::size_t pixel, std::size_t channel) const { return values[pixel * channels + channel]; }
};

enum class DepthOrientation { depth, inverse_depth };

}  // namespace gsrobust

namespace gsrobust::io {

namespace raster_detail {

struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  bool is_float = false;
  std::uint32_t maxval = 0;
  std::vector<double> values;  // raw, top row first
};

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view token() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
  }

  std::uint64_t unsigned_token(const char* what) {
    const auto t = token();
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
      fail(ErrorKind::format, std::string("bad ") + what + " in raster header");
    return v;
  }

  double float_token(const char* what) {
    const std::string t(token());
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::format, std::string("bad ") + what + " in raster header");
    }
  }

  // Exactly one whitespace byte separates the header from the pixel data.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail(ErrorKind::format, "raster header not terminated");
    ++pos_;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline Raster decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) fail(ErrorKind::format, "file too short to carry a raster header");
  Cursor cur(bytes);
  const std::string magic(cur.token());
  Raster r;
  if (magic == "PF" || magic == "Pf") {
    r.is_float = true;
    r.channels = magic == "PF" ? 3 : 1;
    r.width = cur.unsigned_token("width");
    r.height = cur.unsigned_token("height");
    const double scale = cur.float_token("scale");
    if (scale == 0.0 || !std::isfinite(scale)) fail(ErrorKind::format, "PFM scale must be finite and nonzero");
    cur.single_whitespace();
    const bool little = scale < 0.0;
    const std::size_t n = r.width * r.height * r.channels;
    if (bytes.size() - cur.position() < n * 4) fail(ErrorKind::format, "PFM pixel data is truncated");
    r.values.resize(n);
    const std::uint8_t* data = bytes.data() + cur.position();
    // PFM rows run bottom-to-top.
    for (std::size_t row = 0; row < r.height; ++row) {
      const std::size_t dst_row = r.height - 1 - row;
      for (std::size_t k = 0; k < r.width * r.channels; ++k) {
        std::array<std::uint8_t, 4> b;
        std::memcpy(b.data(), data + (row * r.width * r.channels + k) * 4, 4);
        if (little != (std::endian::native == std::endian::little)) std::reverse(b.begin(), b.end());
        r.values[dst_row * r.width * r.channels + k] = std::bit_cast<float>(b);
      }
    }
  } else if (magic == "P5" || magic == "P6") {
    r.channels = magic == "P6" ? 3 : 1;
    r.width = cur.unsigned_token("width");
    r.height = cur.unsigned_token("height");
    const std::uint64_t maxval = cur.unsigned_token("maxval");
    if (maxval == 0 || maxval > 65535) fail(ErrorKind::format, "netpbm maxval must be in [1, 65535]");
    r.maxval = static_cast<std::uint32_t>(maxval);
    cur.single_whitespace();
    const std::size_t bps = maxval > 255 ? 2 : 1;
    const std::size_t n = r.width * r.height * r.channels;
    if (bytes.size() - cur.position() < n * bps) fail(ErrorKind::format, "netpbm pixel data is truncated");
    r.values.resize(n);
    const std::uint8_t* data = bytes.data() + cur.position();
    for (std::size_t i = 0; i < n; ++i)
      r.values[i] = bps == 2 ? static_cast<double>((data[2 * i] << 8) | data[2 * i + 1]) : data[i];
  } else {
    fail(ErrorKind::format, "unsupported raster magic number '" + magic.substr(0, 8) + "'");
  }
  if (r.width == 0 || r.height == 0) fail(ErrorKind::format, "raster has zero extent");
  return r;
}

}  // namespace raster_detail

/// Loads a PFM or PGM depth map. With `inverse_depth`, values are remapped
/// v -> max - v so that larger always means farther.
inline DepthMap load_depth_map(std::span<const std::uint8_t> bytes, DepthOrientation orientation) {
  auto r = raster_detail::decode(bytes);
  if (r.channels != 1) fail(ErrorKind::format, "depth maps must be single-channel");
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (!std::isfinite(r.values[i])) fail(ErrorKind::data, "non-finite depth at pixel " + std::to_string(i));
    if (r.values[i] < 0.0) fail(ErrorKind::data, "negative depth at pixel " + std::to_string(i));
  }
  DepthMap map{r.width, r.height, std::move(r.values)};
  if (orientation == DepthOrientation::inverse_depth) {
    const double max_raw = map.max_value();
    for (double& v : map.values) v = max_raw - v;
  }
  if (!(map.max_value() > 0.0)) fail(ErrorKind::data, "depth map has no positive value (D_max = 0)");
  return map;
}

/// Loads a PFM, 8/16-bit PGM or PPM image normalized to [0,1].
inline ImagePlane load_image(std::span<const std::uint8_t> bytes) {
  auto r = raster_detail::decode(bytes);
  ImagePlane img{r.width, r.height, r.channels, std::move(r.values)};
  if (r.is_float) {
    for (std::size_t i = 0; i < img.values.size(); ++i)
      if (!(img.values[i] >= 0.0 && img.values[i] <= 1.0))
        fail(ErrorKind::data, "PFM image value outside [0,1] at index " + std::to_string(i));
  } else {
    const double inv = 1.0 / r.maxval;
    for (double& v : img.values) v = std::min(1.0, v * inv);
  }
  return img;
}

inline DepthMap load_depth_map(const std::filesystem::path& path, DepthOrientation orientation) {
  return load_depth_map(read_file(path), orientation);
}

inline ImagePlane load_image(const std::filesystem::path& path) { return load_image(read_file(path)); }

// Writers, used for fixtures and round-trips.

inline Bytes encode_pfm(std::size_t width, std::size_t height, std::size_t channels, std::span<const double> values) {
  require(channels == 1 || channels == 3, ErrorKind::contract, "PFM supports 1 or 3 channels");
  require(values.size() == width * height * channels, ErrorKind::contract, "PFM value count mismatch");
  const std::string head = std::string(channels == 3 ? "PF" : "Pf") + "\n" + std::to_string(width) + " " +
                           std::to_string(height) + "\n-1.0\n";
  Bytes out(head.begin(), head.end());
  for (std::size_t row = height; row-- > 0;) {
    for (std::size_t k = 0; k < width * channels; ++k) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[row * width * channels + k]));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffu));
    }
  }
  return out;
}

/// Raw integer samples; maxval above 255 selects two big-endian bytes per sample.
inline Bytes encode_netpbm(std::size_t width, std::size_t height, std::size_t channels, std::uint32_t maxval,
                           std::span<const std::uint16_t> samples) {
  require(channels == 1 || channels == 3, ErrorKind::contract, "netpbm supports 1 or 3 channels");
  require(samples.size() == width * height * channels, ErrorKind::contract, "netpbm sample count mismatch");
  const std::string head = std::string(channels == 3 ? "P6" : "P5") + "\n" + std::to_string(width) + " " +
                           std::to_string(height) + "\n" + std::to_string(maxval) + "\n";
  Bytes out(head.begin(), head.end());
  for (std::uint16_t s : samples) {
    if (maxval > 255) out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xffu));
  }
  return out;
}

}  // namespace gsrobust::io
