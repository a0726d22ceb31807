#pragma once

#include "mattekit/image.hpp"
#include "mattekit/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mattekit {

struct ForegroundAsset {
  std::string id;
  Rgb fg;
  Matte alpha;
};

struct Background {
  std::string id;
  Rgb image;
};

struct Provenance {
  std::string fg_id;
  std::string bg_id;
  std::uint64_t seed = 0;
  int dilation = 0;
};

/// One training / evaluation unit. `image` is the composite of `fg` over `bg`
/// with `alpha`.
struct CompositeSample {
  Rgb image;
  Trimap trimap;
  Matte alpha;
  Rgb fg;
  Rgb bg;
  Provenance provenance;

  Eigen::Index rows() const { return alpha.rows(); }
  Eigen::Index cols() const { return alpha.cols(); }
};

struct DatasetConfig {
  int backgrounds_per_fg = 1;
  int d_min = 1;
  int d_max = 25;
  std::vector<int> crop_sizes{320, 480, 640};
  int train_size = 320;
  std::uint64_t seed = 0;
  /// Largest upscale applied to a background to cover a foreground.
  double max_bg_upscale = 4.0;

  void validate() const;
  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

/// Training-data strategies; each flag toggles one of them.
struct AugmentOptions {
  bool center_on_unknown = true;
  bool multi_scale = true;
  bool random_flip = true;
  bool random_dilation = true;
  bool regenerate_each_epoch = true;

  friend bool operator==(const AugmentOptions&, const AugmentOptions&) = default;
};

/// Scales `bg` (aspect preserved) to cover rows x cols, then center-crops.
/// Returns false when the required upscale exceeds `max_upscale`.
bool fit_background(const Rgb& bg, Eigen::Index rows, Eigen::Index cols,
                    double max_upscale, Rgb& out);

/// |fgs| * N composites; deterministic in cfg.seed. Skipped pairs are
/// reported through `warnings`.
std::vector<CompositeSample> synthesize_dataset(
    std::span<const ForegroundAsset> fgs, std::span<const Background> bgs,
    const DatasetConfig& cfg, std::vector<std::string>* warnings = nullptr);

/// Random crop centered in the unknown region, optionally rescaled, flipped
/// and re-dilated.
CompositeSample augment_crop(const CompositeSample& sample,
                             const DatasetConfig& cfg, Rng& rng,
                             const AugmentOptions& options = {});

/// Mirrors every layer of the sample left-right.
CompositeSample flip_sample(const CompositeSample& sample);

/// Lazily materialized, deterministic epoch of augmented samples.
class EpochStream {
 public:
  EpochStream(const std::vector<CompositeSample>& dataset, int epoch,
              const DatasetConfig& cfg, const AugmentOptions& options);

  std::size_t size() const { return order_.size(); }
  CompositeSample at(std::size_t i) const;
  std::uint64_t epoch_seed() const { return epoch_seed_; }

 private:
  const std::vector<CompositeSample>* dataset_;
  DatasetConfig cfg_;
  AugmentOptions options_;
  std::uint64_t epoch_seed_;
  std::vector<std::size_t> order_;
};

EpochStream regenerate_epoch(const std::vector<CompositeSample>& dataset,
                             int epoch, const DatasetConfig& cfg,
                             const AugmentOptions& options = {});

}  // namespace mattekit
