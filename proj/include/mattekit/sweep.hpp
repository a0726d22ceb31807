#pragma once

#include "mattekit/dataset.hpp"
#include "mattekit/metrics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mattekit {

struct MetricsRow {
  std::string image_id;
  std::optional<int> dilation;
  MetricValues values;
  bool missing = false;
  std::string error;
};

/// Per-image rows plus mean rows. For a sweep there is one mean row per
/// dilation; otherwise a single one.
struct MetricsReport {
  MetricParams params;
  std::vector<MetricsRow> rows;
  std::vector<MetricsRow> aggregates;
  std::vector<std::string> flags;
};

/// Appends the mean of the non-missing rows matching `dilation`.
void append_aggregate(MetricsReport& report, std::optional<int> dilation);

using Predictor = std::function<Matte(const Rgb& image, const Trimap& trimap)>;

struct SweepConfig {
  std::vector<int> d_list{1, 4, 7, 10, 13, 16, 19};
  /// Keep one randomly chosen sample per unique foreground.
  bool one_per_foreground = true;
  std::uint64_t seed = 0;
  MetricParams metrics{};

  void validate() const;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

/// Indices of the samples a sweep evaluates.
std::vector<std::size_t> sweep_subset(const std::vector<CompositeSample>& dataset,
                                      const SweepConfig& cfg);

/// For every d, rebuilds each trimap from the ground-truth matte at dilation d,
/// runs the predictor and scores it. Predictor failures become missing rows.
MetricsReport trimap_sweep(const Predictor& predictor,
                           const std::vector<CompositeSample>& dataset,
                           const SweepConfig& cfg);

/// Trimap-copy baseline: FG 1, BG 0, UNKNOWN 0.5.
Predictor trimap_copy_predictor();

}  // namespace mattekit
