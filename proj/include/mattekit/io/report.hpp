#pragma once

#include "mattekit/sweep.hpp"

#include <filesystem>
#include <string>

namespace mattekit::io {

/// image_id,d,sad_raw,sad_k,mse,grad,conn — per-image rows then mean rows.
/// Missing rows keep their id and leave the metric columns empty.
std::string report_csv(const MetricsReport& report);

/// Same content as JSON, with the metric parameters and flags.
std::string report_json(const MetricsReport& report);

/// Writes metrics.csv and metrics.json into `dir`.
void write_report(const std::filesystem::path& dir, const MetricsReport& report);

}  // namespace mattekit::io
