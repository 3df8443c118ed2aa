#pragma once

// Lossless quarter-turn rotation of raster buffers, plus a minimal binary
// PPM (P6) reader/writer so realized manifests can ship physically rotated
// copies without an image codec. Evaluation logic never inspects pixels.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "roteval/common.hpp"
#include "roteval/dataset.hpp"

namespace roteval {

struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved

  std::uint8_t* at(int x, int y) { return pixels.data() + (std::size_t(y) * width + x) * channels; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (std::size_t(y) * width + x) * channels;
  }
};

// One quarter turn clockwise: source (x, y) lands at (H-1-y, x).
inline Image rotate_image_90cw(const Image& src) {
  Image dst;
  dst.width = src.height;
  dst.height = src.width;
  dst.channels = src.channels;
  dst.pixels.resize(src.pixels.size());
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      const std::uint8_t* s = src.at(x, y);
      std::uint8_t* d = dst.at(src.height - 1 - y, x);
      for (int c = 0; c < src.channels; ++c) d[c] = s[c];
    }
  return dst;
}

inline Image rotate_image(const Image& src, Orientation phi) {
  Image out = src;
  for (int i = 0; i < orientation_index(phi); ++i) out = rotate_image_90cw(out);
  return out;
}

inline Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") fail(errc::io_error, path + ": not a binary PPM");
  auto next_int = [&]() {
    int v;
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (!(in >> v)) fail(errc::io_error, path + ": truncated PPM header");
      return v;
    }
  };
  Image img;
  img.width = next_int();
  img.height = next_int();
  int maxval = next_int();
  if (maxval != 255) fail(errc::io_error, path + ": only maxval 255 supported");
  in.get();  // single whitespace after maxval
  img.pixels.resize(std::size_t(img.width) * img.height * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  if (in.gcount() != std::streamsize(img.pixels.size()))
    fail(errc::io_error, path + ": truncated pixel data");
  return img;
}

inline void save_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot open " + path + " for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
}

}  // namespace roteval
