#include "mattekit/io/png.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace mattekit::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, interleaved

  std::uint16_t at(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error(path.string() + ": " + why);
}

RawImage read_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(path, "cannot open");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(path, "not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  RawImage raw;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt PNG data");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (depth == 16) png_set_swap(png);  // host little-endian samples
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, int bit_depth, const std::vector<std::uint16_t>& samples) {
  File file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(path, "cannot open for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  const std::size_t bytes = bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * bytes;
  std::vector<png_byte> buffer(rowbytes * height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bit_depth == 16) {
      buffer[2 * i] = static_cast<png_byte>(samples[i] >> 8);  // big-endian
      buffer[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG encoding failed");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint16_t quantize(float v, double max_value) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(c * max_value));
}

}  // namespace

std::uint8_t snap_trimap_value(std::uint8_t v) {
  if (v < 64) return trimap_code::kBackground;
  if (v < 192) return trimap_code::kUnknown;
  return trimap_code::kForeground;
}

Rgb read_rgb(const std::filesystem::path& path) {
  const RawImage raw = read_png(path);
  if (raw.channels != 3) {
    fail(path, "expected 3-channel RGB, got " + std::to_string(raw.channels) +
                   " channel(s)");
  }
  Rgb out(raw.height, raw.width);
  const double scale = raw.max_value();
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.ch[c](y, x) = static_cast<float>(raw.at(y, x, c) / scale);
      }
    }
  }
  return out;
}

Matte read_matte(const std::filesystem::path& path) {
  const RawImage raw = read_png(path);
  if (raw.channels != 1) {
    fail(path, "expected 1-channel grayscale matte, got " +
                   std::to_string(raw.channels) + " channel(s)");
  }
  Matte out(raw.height, raw.width);
  const double scale = raw.max_value();
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      out(y, x) = static_cast<float>(raw.at(y, x, 0) / scale);
    }
  }
  return out;
}

TrimapFile read_trimap(const std::filesystem::path& path) {
  const RawImage raw = read_png(path);
  if (raw.channels != 1 || raw.bit_depth != 8) {
    fail(path, "expected 8-bit grayscale trimap");
  }
  TrimapFile out;
  out.trimap.resize(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const auto v = static_cast<std::uint8_t>(raw.at(y, x, 0));
      const std::uint8_t s = snap_trimap_value(v);
      if (s != v) ++out.snapped;
      out.trimap(y, x) = s;
    }
  }
  return out;
}

void write_rgb(const std::filesystem::path& path, const Rgb& image) {
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        samples[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            quantize(image.ch[c](y, x), 255.0);
      }
    }
  }
  write_png(path, w, h, 3, 8, samples);
}

void write_matte(const std::filesystem::path& path, const Matte& matte,
                 int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    fail(path, "matte bit depth must be 8 or 16");
  }
  const int h = static_cast<int>(matte.rows());
  const int w = static_cast<int>(matte.cols());
  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      samples[static_cast<std::size_t>(y) * w + x] = quantize(matte(y, x), max_value);
    }
  }
  write_png(path, w, h, 1, bit_depth, samples);
}

void write_trimap(const std::filesystem::path& path, const Trimap& trimap) {
  const int h = static_cast<int>(trimap.rows());
  const int w = static_cast<int>(trimap.cols());
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      samples[static_cast<std::size_t>(y) * w + x] = trimap(y, x);
    }
  }
  write_png(path, w, h, 1, 8, samples);
}

}  // namespace mattekit::io
