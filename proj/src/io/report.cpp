#include "mattekit/io/report.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mattekit::io {

namespace {

using nlohmann::json;

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void csv_row(std::ostream& os, const MetricsRow& row) {
  os << row.image_id << ',';
  if (row.dilation) os << *row.dilation;
  if (row.missing) {
    os << ",,,,,\n";
    return;
  }
  const auto& v = row.values;
  os << ',' << num(v.sad.raw) << ',' << num(v.sad.kilo) << ',' << num(v.mse) << ','
     << num(v.gradient) << ',' << num(v.connectivity) << '\n';
}

json row_json(const MetricsRow& row) {
  json j;
  j["image_id"] = row.image_id;
  j["d"] = row.dilation ? json(*row.dilation) : json(nullptr);
  if (row.missing) {
    j["missing"] = true;
    j["error"] = row.error;
    return j;
  }
  const auto& v = row.values;
  j["sad_raw"] = v.sad.raw;
  j["sad_k"] = v.sad.kilo;
  j["mse"] = v.mse;
  j["grad"] = v.gradient;
  j["conn"] = v.connectivity;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "image_id,d,sad_raw,sad_k,mse,grad,conn\n";
  for (const auto& row : report.rows) csv_row(os, row);
  for (const auto& row : report.aggregates) csv_row(os, row);
  return os.str();
}

std::string report_json(const MetricsReport& report) {
  json j;
  const auto& p = report.params;
  j["params"] = {{"gradient_sigma", p.gradient_sigma},
                 {"gradient_power", p.gradient_power},
                 {"connectivity_step", p.connectivity_step},
                 {"connectivity_theta", p.connectivity_theta},
                 {"connectivity_power", p.connectivity_power},
                 {"sad_units", "raw and /1000"},
                 {"mse_normalization", "mean over unknown pixels"}};
  j["rows"] = json::array();
  for (const auto& row : report.rows) j["rows"].push_back(row_json(row));
  j["aggregates"] = json::array();
  for (const auto& row : report.aggregates) j["aggregates"].push_back(row_json(row));
  j["flags"] = report.flags;
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& dir, const MetricsReport& report) {
  std::filesystem::create_directories(dir);
  write_text(dir / "metrics.csv", report_csv(report));
  write_text(dir / "metrics.json", report_json(report));
}

}  // namespace mattekit::io
