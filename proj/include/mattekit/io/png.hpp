#pragma once

#include "mattekit/image.hpp"

#include <cstddef>
#include <filesystem>

namespace mattekit::io {

/// 8- or 16-bit RGB PNG, mapped to [0, 1].
Rgb read_rgb(const std::filesystem::path& path);

/// 8- or 16-bit grayscale PNG, mapped to [0, 1] by /255 or /65535.
Matte read_matte(const std::filesystem::path& path);

struct TrimapFile {
  Trimap trimap;
  /// Pixels that were not exactly 0, 128 or 255 and were snapped.
  std::size_t snapped = 0;
};

/// 8-bit grayscale trimap; values snap to the nearest of {0, 128, 255}.
TrimapFile read_trimap(const std::filesystem::path& path);

void write_rgb(const std::filesystem::path& path, const Rgb& image);

/// Bit depth 8 or 16.
void write_matte(const std::filesystem::path& path, const Matte& matte,
                 int bit_depth = 16);

void write_trimap(const std::filesystem::path& path, const Trimap& trimap);

/// Nearest of {0, 128, 255}.
std::uint8_t snap_trimap_value(std::uint8_t v);

}  // namespace mattekit::io
