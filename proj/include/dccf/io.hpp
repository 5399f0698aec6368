//  Copyright 2026 The dccf Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dccf/error.hpp"
#include "dccf/filters.hpp"
#include "dccf/image.hpp"
#include "dccf/interact.hpp"
#include "dccf/optimizer.hpp"

namespace dccf {

using Bytes = std::string;

/// Decoded 8/16-bit raster before conversion to RgbImage or Mask.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<double> data;
};

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("error writing " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

/// v ∈ [0,1] → 8-bit with round-half-up.
inline std::uint8_t quantize8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

// ---------------------------------------------------------------------------
// PPM / PGM

namespace detail {

struct PnmCursor {
  std::string_view s;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < s.size()) {
      if (s[pos] == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  int integer() {
    skip_space();
    if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
      throw FormatError("corrupt PNM header");
    }
    long v = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      v = v * 10 + (s[pos++] - '0');
      if (v > (1 << 24)) throw FormatError("corrupt PNM header: value out of range");
    }
    return static_cast<int>(v);
  }
};

inline Raster decode_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    throw FormatError("not a binary PPM/PGM file");
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  PnmCursor cur{bytes, 2};
  const int w = cur.integer();
  const int h = cur.integer();
  const int maxval = cur.integer();
  if (w <= 0 || h <= 0) throw FormatError("corrupt PNM header: empty image");
  if (maxval != 255) throw FormatError("unsupported PNM bit depth (maxval " + std::to_string(maxval) + ")");
  if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos]))) {
    throw FormatError("corrupt PNM header");
  }
  ++cur.pos;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - cur.pos < n) throw FormatError("corrupt PNM: truncated pixel data");
  Raster r{w, h, channels, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) r.data[i] = static_cast<unsigned char>(bytes[cur.pos + i]) / 255.0;
  return r;
}

inline Bytes encode_pnm(const std::vector<double>& data, int w, int h, int channels) {
  Bytes out = (channels == 3 ? "P6\n" : "P5\n") + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[header + i] = static_cast<char>(quantize8(data[i]));
  return out;
}

// ---------------------------------------------------------------------------
// PNG

struct PngReadState {
  std::string_view bytes;
  std::size_t pos = 0;
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

inline void png_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->bytes.size() - st->pos < n) png_error(png, "truncated PNG data");
  std::memcpy(out, st->bytes.data() + st->pos, n);
  st->pos += n;
}

inline void png_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

inline void png_flush_fn(png_structp) {}

inline bool is_png(std::string_view bytes) {
  return bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0;
}

inline Raster decode_png(std::string_view bytes) {
  if (!is_png(bytes)) throw FormatError("not a PNG file");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw FormatError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw FormatError("libpng initialization failed");
  }
  PngReadState st{bytes, 0};
  // Everything libpng-owned lives in these; no C++ objects with destructors
  // are created between setjmp and the last libpng call.
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  int channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG: " + err);
  }
  png_set_read_fn(png, &st, png_read_fn);
  png_read_info(png, info);
  png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buf.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw FormatError("unsupported PNG channel layout");
  if (depth != 8 && depth != 16) throw FormatError("unsupported PNG bit depth " + std::to_string(depth));
  Raster r{static_cast<int>(w), static_cast<int>(h), channels,
           std::vector<double>(static_cast<std::size_t>(w) * h * channels)};
  if (depth == 8) {
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = buf[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      std::uint16_t v;
      std::memcpy(&v, buf.data() + 2 * i, 2);
      r.data[i] = v / 65535.0;
    }
  }
  return r;
}

inline Bytes encode_png(const std::vector<double>& data, int w, int h, int channels) {
  std::vector<std::uint8_t> buf(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) buf[i] = quantize8(data[i]);
  std::vector<png_bytep> rows(h);
  const std::size_t stride = static_cast<std::size_t>(w) * channels;
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + y * stride;

  Bytes out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + err);
  }
  png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, w, h, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline Raster decode_any(std::string_view bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
  throw FormatError("unrecognized image format (expected PNG or binary PPM/PGM)");
}

inline bool wants_pnm(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

}  // namespace detail

inline RgbImage decode_image(std::string_view bytes) {
  const Raster r = detail::decode_any(bytes);
  RgbImage img(r.width, r.height);
  if (r.channels == 3) {
    img.data = r.data;
  } else {
    for (std::size_t i = 0; i < img.pixels(); ++i) img.set_pixel(i, {r.data[i], r.data[i], r.data[i]});
  }
  return img;
}

inline Bytes encode_png(const RgbImage& img) { return detail::encode_png(img.data, img.width, img.height, 3); }
inline Bytes encode_png(const PlaneImage& img) { return detail::encode_png(img.data, img.width, img.height, 1); }

/// PNG or binary PPM (P6, 8-bit), detected from content.
inline RgbImage load_image(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Writes binary PPM for .ppm/.pnm paths and PNG otherwise.
inline void save_image(const RgbImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, detail::wants_pnm(path) ? detail::encode_pnm(img.data, img.width, img.height, 3)
                                                  : encode_png(img));
}

inline void save_image(const PlaneImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, detail::wants_pnm(path) ? detail::encode_pnm(img.data, img.width, img.height, 1)
                                                  : encode_png(img));
}

/// Grayscale mask from image bytes; color input is reduced to its channel mean.
/// Hard masks map values ≥ 0.5 to 1 and the rest to 0.
inline Mask decode_mask(std::string_view bytes, bool soft = false) {
  const Raster r = detail::decode_any(bytes);
  Mask m(r.width, r.height);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    double v = r.channels == 1 ? r.data[i] : (r.data[3 * i] + r.data[3 * i + 1] + r.data[3 * i + 2]) / 3.0;
    m.data[i] = soft ? v : (v >= 0.5 ? 1.0 : 0.0);
  }
  return m;
}

inline Mask load_mask(const std::filesystem::path& path, bool soft = false) {
  const Bytes bytes = read_file(path);
  try {
    return decode_mask(bytes, soft);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Filter stack container
//
//   "DCCF"  u16 version  u32 grid_w  u32 grid_h  u16 knots  u8 order[3]
//   float32 channels: val (1 + m), sat (1), hue (12), attn (13)
//
// All integers and floats are little-endian.

inline constexpr std::array<char, 4> kStackMagic = {'D', 'C', 'C', 'F'};
inline constexpr std::uint16_t kStackVersion = 1;

namespace detail {

template <class T>
void put_le(Bytes& out, T v) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>;
  U u;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

struct LeReader {
  std::string_view s;
  std::size_t pos = 0;

  template <class T>
  T get() {
    if (s.size() - pos < sizeof(T)) throw FormatError("stack file truncated");
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
    pos += sizeof(T);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
  }
};

}  // namespace detail

inline Bytes encode_stack(const FilterStack& stack) {
  validate_stack(stack);
  Bytes out(kStackMagic.begin(), kStackMagic.end());
  detail::put_le<std::uint16_t>(out, kStackVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.val.params.width));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stack.val.params.height));
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stack.val.knots()));
  for (Channel c : stack.order) detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(c));
  for_each_grid(stack, [&](const char*, const ParamGrid& g) {
    for (double v : g.data) detail::put_le<float>(out, static_cast<float>(v));
  });
  return out;
}

inline FilterStack decode_stack(std::string_view bytes) {
  detail::LeReader in{bytes};
  if (bytes.size() < 4 || !std::equal(kStackMagic.begin(), kStackMagic.end(), bytes.begin())) {
    throw FormatError("not a filter stack file (bad magic)");
  }
  in.pos = 4;
  const auto version = in.get<std::uint16_t>();
  if (version != kStackVersion) {
    throw FormatError("unsupported filter stack version " + std::to_string(version) + " (expected " +
                      std::to_string(kStackVersion) + ")");
  }
  const auto gw = in.get<std::uint32_t>();
  const auto gh = in.get<std::uint32_t>();
  const auto knots = in.get<std::uint16_t>();
  if (gw < 1 || gh < 1 || gw > (1u << 16) || gh > (1u << 16)) throw FormatError("invalid grid dimensions in stack file");
  if (knots < 1 || knots > kMaxKnots) throw FormatError("invalid knot count in stack file");
  StageOrder order{};
  for (Channel& c : order) {
    const auto v = in.get<std::uint8_t>();
    if (v > 2) throw FormatError("invalid stage order in stack file");
    c = static_cast<Channel>(v);
  }
  if (!is_valid_order(order)) throw FormatError("invalid stage order in stack file");
  FilterStack s = identity_stack(static_cast<int>(gw), static_cast<int>(gh), knots);
  s.order = order;
  const std::size_t expected = in.pos + 4 * (s.val.params.data.size() + s.sat.params.data.size() +
                                             s.hue.params.data.size() + s.attn.params.data.size());
  if (bytes.size() < expected) throw FormatError("stack file truncated");
  if (bytes.size() > expected) throw FormatError("trailing bytes after stack data");
  for_each_grid(s, [&](const char*, ParamGrid& g) {
    for (double& v : g.data) v = static_cast<double>(in.get<float>());
  });
  return s;
}

inline void save_stack(const FilterStack& stack, const std::filesystem::path& path) {
  write_file_atomic(path, encode_stack(stack));
}

inline FilterStack load_stack(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_stack(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON documents

inline nlohmann::json report_to_json(const FitReport& r) {
  return {{"final_mse", r.final_mse},
          {"final_psnr", r.final_psnr},
          {"iterations", r.iterations_run},
          {"wall_time_s", r.wall_time},
          {"loss_history", r.loss_history}};
}

inline FitReport report_from_json(const nlohmann::json& j) {
  FitReport r;
  r.final_mse = j.at("final_mse").get<double>();
  r.final_psnr = j.at("final_psnr").get<double>();
  r.iterations_run = j.at("iterations").get<int>();
  r.wall_time = j.at("wall_time_s").get<double>();
  r.loss_history = j.at("loss_history").get<std::vector<double>>();
  return r;
}

/// {"v_min": x, "phis": [...]}.
inline UserCurve curve_from_json(const nlohmann::json& j) {
  UserCurve c;
  if (!j.is_object() || !j.contains("phis") || !j.at("phis").is_array()) {
    throw std::invalid_argument("value curve needs a \"phis\" array");
  }
  c.v_min = j.value("v_min", 0.0);
  c.phis = j.at("phis").get<std::vector<double>>();
  if (c.phis.empty() || static_cast<int>(c.phis.size()) > kMaxKnots) {
    throw std::invalid_argument("value curve must have 1 to 64 knots");
  }
  return c;
}

inline nlohmann::json curve_to_json(const UserCurve& c) { return {{"v_min", c.v_min}, {"phis", c.phis}}; }

inline UserCurve load_curve(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return curve_from_json(j);
}

}  // namespace dccf
