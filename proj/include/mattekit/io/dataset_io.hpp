#pragma once

#include "mattekit/dataset.hpp"

#include <filesystem>
#include <vector>

namespace mattekit::io {

/// Pairs `<id>_fg.png` (RGB) with `<id>_alpha.png` (grayscale), sorted by id.
std::vector<ForegroundAsset> load_foregrounds(const std::filesystem::path& dir);

/// Every `*.png` in `dir` as an RGB background, id = file stem, sorted.
std::vector<Background> load_backgrounds(const std::filesystem::path& dir);

/// One directory per sample (image, trimap, alpha, fg, bg PNGs) plus
/// manifest.json with the provenance of each sample. Alpha is 16-bit; the
/// colour layers are 8-bit.
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<CompositeSample>& samples);

/// Reads a directory written by write_dataset. The composite is rebuilt from
/// the stored fg, bg and alpha so the sample stays exactly consistent after
/// 8-bit quantization of the colour layers.
std::vector<CompositeSample> read_dataset(const std::filesystem::path& dir);

}  // namespace mattekit::io
