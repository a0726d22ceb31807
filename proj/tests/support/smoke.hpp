// synth -> train -> infer -> eval through the command-line entry point.
#pragma once

#include "mattekit/cli.hpp"
#include "mattekit/io/png.hpp"
#include "support/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace smoke {

struct Step {
  std::string name;
  int code = 0;
  std::string out;
  std::string err;
};

struct Result {
  std::vector<Step> steps;
  std::vector<std::vector<std::string>> metrics;  // eval metrics.csv, header first
  bool ok() const {
    for (const auto& s : steps)
      if (s.code != 0) return false;
    return !steps.empty();
  }
  bool metrics_finite() const {
    if (metrics.size() < 2) return false;
    for (std::size_t i = 1; i < metrics.size(); ++i) {
      if (metrics[i].size() != 7) return false;
      for (int c = 2; c < 7; ++c)
        if (metrics[i][c].empty() || !std::isfinite(std::stod(metrics[i][c]))) return false;
    }
    return true;
  }
};

inline Step run(const std::string& name, const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Step s{name, mattekit::run_command(args, out, err), "", ""};
  s.out = out.str();
  s.err = err.str();
  return s;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

inline std::filesystem::path config_path() {
  return std::filesystem::path(MATTEKIT_SOURCE_DIR) / "configs" / "smoke.yaml";
}

/// Two foregrounds, two backgrounds; everything lands under `dir`.
inline Result run_pipeline(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "assets");
  fs::create_directories(dir / "bgs");
  for (const auto& f : synth::foregrounds(2, 56, 60, 7)) {
    mattekit::io::write_rgb(dir / "assets" / (f.id + "_fg.png"), f.fg);
    mattekit::io::write_matte(dir / "assets" / (f.id + "_alpha.png"), f.alpha);
  }
  for (const auto& b : synth::backgrounds(2, 64, 72, 7)) {
    mattekit::io::write_rgb(dir / "bgs" / (b.id + ".png"), b.image);
  }
  const std::string cfg = config_path().string();
  const std::string data = (dir / "data").string();
  const std::string ckpt = (dir / "run" / "model.ckpt").string();
  Result r;
  const std::vector<std::pair<std::string, std::vector<std::string>>> plan = {
      {"synth",
       {"synth", "--config", cfg, "--assets", (dir / "assets").string(), "--backgrounds",
        (dir / "bgs").string(), "--out", data}},
      {"train", {"train", "--config", cfg, "--dataset", data, "--out", (dir / "run").string()}},
      {"infer",
       {"infer", "--config", cfg, "--checkpoint", ckpt, "--dataset", data, "--out",
        (dir / "preds").string()}},
      {"eval",
       {"eval", "--config", cfg, "--pred", (dir / "preds").string(), "--dataset", data,
        "--out", (dir / "eval").string()}},
  };
  for (const auto& [name, args] : plan) {
    r.steps.push_back(run(name, args));
    if (r.steps.back().code != 0) return r;
  }
  r.metrics = read_csv(dir / "eval" / "metrics.csv");
  return r;
}

}  // namespace smoke
