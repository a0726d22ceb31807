// Small model and dataset settings shared by the heavier tests.
#pragma once

#include "mattekit/dataset.hpp"
#include "mattekit/model.hpp"
#include "support/synthetic.hpp"

namespace toy {

inline mattekit::Stage1Config stage1(double width) {
  mattekit::Stage1Config c;
  c.width_multiplier = width;
  return c;
}

inline mattekit::Stage2Config stage2(double width) {
  mattekit::Stage2Config c;
  c.width_multiplier = width;
  return c;
}

inline mattekit::DatasetConfig dataset_config(int size, std::uint64_t seed) {
  mattekit::DatasetConfig c;
  c.crop_sizes = {size};
  c.train_size = size;
  c.d_min = 2;
  c.d_max = 4;
  c.seed = seed;
  return c;
}

/// `count` composites of size x size, one background each.
inline std::vector<mattekit::CompositeSample> dataset(int count, int size,
                                                      std::uint64_t seed) {
  const auto fgs = synth::foregrounds(count, size, size, seed);
  const auto bgs = synth::backgrounds(count, size, size, seed);
  return mattekit::synthesize_dataset(fgs, bgs, dataset_config(size, seed));
}

}  // namespace toy
