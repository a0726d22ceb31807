#pragma once

#include "mattekit/dataset.hpp"
#include "mattekit/guided_filter.hpp"
#include "mattekit/losses.hpp"
#include "mattekit/model.hpp"
#include "mattekit/sweep.hpp"
#include "mattekit/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace mattekit::io {

struct PathsConfig {
  std::string assets;       // <id>_fg.png / <id>_alpha.png pairs
  std::string backgrounds;  // loose RGB images
  std::string dataset;      // synthesized dataset directory
  std::string out;
  std::string checkpoint;

  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

/// Post-processing applied after stage 1 at inference time.
struct RefineConfig {
  enum class Mode { kNone, kStage2, kGuided };
  Mode mode = Mode::kStage2;
  GuidedFilterConfig guided{};

  friend bool operator==(const RefineConfig&, const RefineConfig&) = default;
};

/// Parses "none", "stage2" or "guided[:r=20,eps=1e-4]".
RefineConfig parse_refine(const std::string& text);
std::string format_refine(const RefineConfig& refine);

/// The single `seed` feeds the dataset, training and sweep seeds; those
/// copies are not separate config keys.
struct PipelineConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset{};
  Stage1Config stage1{};
  Stage2Config stage2{};
  double width_multiplier = 1.0;
  TrainPlan training{};
  LossConfig loss{};
  SweepConfig sweep{};
  RefineConfig refine{};
  PathsConfig paths{};

  /// Stage configs with the shared width multiplier applied.
  Stage1Config effective_stage1() const;
  Stage2Config effective_stage2() const;
  /// Sets the global seed and the per-module seeds derived from it.
  void set_seed(std::uint64_t s);
  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// YAML with sections seed, dataset, model, training, loss, eval, paths.
/// Missing keys keep their defaults; unknown keys and malformed YAML are
/// rejected with the offending line number.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

std::string serialize_config(const PipelineConfig& cfg);

}  // namespace mattekit::io
