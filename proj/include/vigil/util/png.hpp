#pragma once

// Minimal lossless raster support: an 8-bit RGB image buffer plus a PNG
// encoder (zlib does the compression and CRC work). Determinism matters more
// than ratio here — compression level is pinned so identical pixels always
// produce identical bytes.

#include <zlib.h>

#include <cstdint>
#include <string>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

class Image {
 public:
  Image(int width, int height, Rgb fill = {255, 255, 255})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw DomainError("[circle-game] image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) set(x, y, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  Rgb get(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }

  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  // Alpha-composite `c` over the current pixel (alpha in [0,1]).
  void blend(int x, int y, Rgb c, double alpha) {
    const Rgb base = get(x, y);
    auto mix = [&](std::uint8_t over, std::uint8_t under) {
      const double v = alpha * over + (1.0 - alpha) * under;
      return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v + 0.5));
    };
    set(x, y, {mix(c.r, base.r), mix(c.g, base.g), mix(c.b, base.b)});
  }

  const std::vector<std::uint8_t>& raw() const { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    if (!in_bounds(x, y)) throw DomainError("[circle-game] pixel out of bounds");
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

namespace detail {

inline void append_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

inline void append_chunk(std::string& out, const char type[4], const std::string& data) {
  append_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.append(type, 4);
  out += data;
  const auto* p = reinterpret_cast<const Bytef*>(out.data() + crc_start);
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, p, static_cast<uInt>(out.size() - crc_start)));
  append_u32_be(out, crc);
}

}  // namespace detail

// Encodes the image as a truecolor 8-bit PNG (filter type 0 on every
// scanline, zlib level 6). Output is byte-identical for identical pixels.
inline std::string png_encode(const Image& img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.height()) * (img.width() * 3 + 1));
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back('\0');  // filter: None
    for (int x = 0; x < img.width(); ++x) {
      const Rgb c = img.get(x, y);
      raw.push_back(static_cast<char>(c.r));
      raw.push_back(static_cast<char>(c.g));
      raw.push_back(static_cast<char>(c.b));
    }
  }

  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> compressed(bound);
  const int rc = ::compress2(compressed.data(), &bound,
                             reinterpret_cast<const Bytef*>(raw.data()),
                             static_cast<uLong>(raw.size()), /*level=*/6);
  if (rc != Z_OK) throw GenerationError("[circle-game] zlib compression failed");

  std::string ihdr;
  detail::append_u32_be(ihdr, static_cast<std::uint32_t>(img.width()));
  detail::append_u32_be(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace

  std::string out("\x89PNG\r\n\x1a\n", 8);
  detail::append_chunk(out, "IHDR", ihdr);
  detail::append_chunk(
      out, "IDAT", std::string(reinterpret_cast<const char*>(compressed.data()), bound));
  detail::append_chunk(out, "IEND", "");
  return out;
}

}  // namespace vigil
