#pragma once

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "cytoseg/raster.hpp"

// Raster file I/O: 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) and
// binary PGM ("P5") in; 8-bit or 16-bit grayscale PNG out.

namespace cytoseg {

namespace detail {

struct DecodedRaster {
  int width = 0;
  int height = 0;
  int bit_depth = 8;  // 8 or 16 after decoding
  std::vector<std::uint16_t> values;
};

// Integer-rounded Rec.601 luma.
inline std::uint16_t rec601_luma(unsigned r, unsigned g, unsigned b) {
  return static_cast<std::uint16_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

struct PngReadHandle {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngReadHandle() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

struct PngWriteHandle {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngWriteHandle() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

inline void png_silent_warning(png_structp, png_const_charp) {}

// Decodes a PNG, folding colour to luma. Sixteen-bit samples are kept raw
// so that label maps survive a round trip; the caller decides whether a
// given depth is acceptable.
inline DecodedRaster read_png(const std::string& path) {
  PngReadHandle h;
  h.file = std::fopen(path.c_str(), "rb");
  require(h.file != nullptr, ErrorCode::unreadable_file, path);
  h.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_silent_warning);
  require(h.png != nullptr, ErrorCode::io_failure, "png_create_read_struct");
  h.info = png_create_info_struct(h.png);
  require(h.info != nullptr, ErrorCode::io_failure, "png_create_info_struct");

  DecodedRaster out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  int channels = 0;
  bool bad_depth = false;

  if (setjmp(png_jmpbuf(h.png))) {
    throw Error(ErrorCode::unreadable_file, "corrupt png: " + path);
  }
  png_init_io(h.png, h.file);
  png_read_info(h.png, h.info);
  const png_uint_32 w = png_get_image_width(h.png, h.info);
  const png_uint_32 ht = png_get_image_height(h.png, h.info);
  const int depth = png_get_bit_depth(h.png, h.info);
  const int color = png_get_color_type(h.png, h.info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(h.png);
  } else if (depth < 8) {
    bad_depth = true;
  }
  png_set_strip_alpha(h.png);
  if (depth == 16) png_set_swap(h.png);  // little-endian 16-bit samples
  png_read_update_info(h.png, h.info);
  channels = png_get_channels(h.png, h.info);
  const int out_depth = png_get_bit_depth(h.png, h.info);
  const std::size_t rowbytes = png_get_rowbytes(h.png, h.info);
  buffer.resize(rowbytes * ht);
  rows.resize(ht);
  for (png_uint_32 y = 0; y < ht; ++y) rows[y] = buffer.data() + y * rowbytes;
  if (!bad_depth) png_read_image(h.png, rows.data());

  require(!bad_depth, ErrorCode::unsupported_bit_depth, path + " has sub-8-bit grayscale samples");
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(ht);
  out.bit_depth = out_depth;
  out.values.resize(static_cast<std::size_t>(w) * ht);
  for (png_uint_32 y = 0; y < ht; ++y) {
    const png_byte* row = rows[y];
    for (png_uint_32 x = 0; x < w; ++x) {
      std::array<unsigned, 3> s{};
      for (int c = 0; c < channels && c < 3; ++c) {
        if (out_depth == 16) {
          const png_byte* p = row + (x * channels + c) * 2;
          s[c] = static_cast<unsigned>(p[0]) | (static_cast<unsigned>(p[1]) << 8);
        } else {
          s[c] = row[x * channels + c];
        }
      }
      out.values[y * w + x] = channels >= 3 ? rec601_luma(s[0], s[1], s[2]) : static_cast<std::uint16_t>(s[0]);
    }
  }
  return out;
}

inline bool is_pgm_space(int c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

inline DecodedRaster read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::unreadable_file, path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && is_pgm_space(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      any = true;
      ++pos;
      if (v > 1'000'000'000L) break;
    }
    require(any, ErrorCode::unreadable_file, "malformed pgm header: " + path);
    return v;
  };
  const long w = next_int();
  const long ht = next_int();
  const long maxval = next_int();
  require(pos < bytes.size() && is_pgm_space(bytes[pos]), ErrorCode::unreadable_file, "malformed pgm header: " + path);
  ++pos;
  require(maxval >= 1 && maxval <= 65535, ErrorCode::unreadable_file, "pgm maxval out of range: " + path);
  require(maxval <= 255, ErrorCode::unsupported_bit_depth, path + " is a 16-bit pgm");
  require(w > 0 && ht > 0 && w < 65536 && ht < 65536, ErrorCode::unreadable_file, "pgm size out of range: " + path);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(ht);
  require(bytes.size() - pos >= n, ErrorCode::unreadable_file, "truncated pgm: " + path);
  DecodedRaster out;
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(ht);
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[pos + i]));
    require(v <= maxval, ErrorCode::unreadable_file, "pgm sample exceeds maxval: " + path);
    out.values[i] = v;
  }
  return out;
}

enum class FileKind { png, pgm, unknown };

inline FileKind sniff(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::unreadable_file, path);
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got >= 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return FileKind::png;
  if (got >= 3 && sig[0] == 'P' && sig[1] == '5' && is_pgm_space(sig[2])) return FileKind::pgm;
  return FileKind::unknown;
}

inline DecodedRaster read_any(const std::string& path) {
  switch (sniff(path)) {
    case FileKind::png: return read_png(path);
    case FileKind::pgm: return read_pgm(path);
    case FileKind::unknown: break;
  }
  throw Error(ErrorCode::unsupported_format, path);
}

inline void write_png(const std::string& path, int width, int height, int bit_depth,
                      std::span<const std::uint16_t> values) {
  PngWriteHandle h;
  h.file = std::fopen(path.c_str(), "wb");
  require(h.file != nullptr, ErrorCode::io_failure, "cannot open for writing: " + path);
  h.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_silent_warning);
  require(h.png != nullptr, ErrorCode::io_failure, "png_create_write_struct");
  h.info = png_create_info_struct(h.png);
  require(h.info != nullptr, ErrorCode::io_failure, "png_create_info_struct");

  const std::size_t bytes_per = bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> buffer(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes_per);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (bit_depth == 16) {
      buffer[2 * i] = static_cast<png_byte>(values[i] >> 8);  // PNG is big-endian
      buffer[2 * i + 1] = static_cast<png_byte>(values[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(values[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * bytes_per;

  if (setjmp(png_jmpbuf(h.png))) {
    throw Error(ErrorCode::io_failure, "png write failed: " + path);
  }
  png_init_io(h.png, h.file);
  png_set_compression_level(h.png, 6);
  png_set_IHDR(h.png, h.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(h.png, h.info);
  png_write_image(h.png, rows.data());
  png_write_end(h.png, nullptr);
  require(std::fflush(h.file) == 0, ErrorCode::io_failure, "flush failed: " + path);
}

}  // namespace detail

/// Loads an 8-bit PNG or P5 PGM as a grayscale image (l_max = 255). Colour
/// PNGs are reduced to integer-rounded Rec.601 luma; 16-bit and sub-8-bit
/// grayscale inputs are rejected with ErrorCode::unsupported_bit_depth.
inline GrayImage load_grayscale(const std::string& path) {
  auto r = detail::read_any(path);
  detail::require(r.bit_depth == 8, ErrorCode::unsupported_bit_depth, path + " is not 8-bit");
  return GrayImage(r.width, r.height, std::move(r.values));
}

/// Loads an 8-bit mask file; any non-zero sample is foreground.
inline BinaryMask load_mask(const std::string& path) {
  auto r = detail::read_any(path);
  detail::require(r.bit_depth == 8, ErrorCode::unsupported_bit_depth, path + " is not an 8-bit mask");
  BinaryMask m(r.width, r.height);
  for (std::size_t i = 0; i < r.values.size(); ++i) m[i] = r.values[i] != 0 ? 1 : 0;
  return m;
}

/// Loads a label map written by save_mask(LabelMap). n_labels is set to the
/// largest label present.
inline LabelMap load_label_map(const std::string& path) {
  auto r = detail::read_any(path);
  std::vector<std::int32_t> labels(r.values.begin(), r.values.end());
  const int n = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  return LabelMap(r.width, r.height, std::move(labels), n);
}

/// Writes foreground as 255 and background as 0 (8-bit gray PNG).
inline void save_mask(const BinaryMask& mask, const std::string& path) {
  std::vector<std::uint16_t> v(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 255 : 0;
  detail::write_png(path, mask.width(), mask.height(), 8, v);
}

/// Writes raw label values as a 16-bit gray PNG.
inline void save_mask(const LabelMap& labels, const std::string& path) {
  std::vector<std::uint16_t> v(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    detail::require(labels[i] >= 0 && labels[i] <= 65535, ErrorCode::invalid_argument,
                    "label does not fit in 16 bits");
    v[i] = static_cast<std::uint16_t>(labels[i]);
  }
  detail::write_png(path, labels.width(), labels.height(), 16, v);
}

/// Writes an image as 8-bit gray PNG when l_max <= 255, else 16-bit.
inline void save_image(const GrayImage& image, const std::string& path) {
  detail::write_png(path, image.width(), image.height(), image.l_max() <= 255 ? 8 : 16, image.data());
}

}  // namespace cytoseg
