#include "mattekit/io/dataset_io.hpp"

#include "mattekit/compositing.hpp"
#include "mattekit/io/png.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mattekit::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string sample_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

}  // namespace

std::vector<ForegroundAsset> load_foregrounds(const fs::path& dir) {
  std::vector<ForegroundAsset> out;
  for (const auto& path : sorted_pngs(dir)) {
    const std::string stem = path.stem().string();
    if (!ends_with(stem, "_fg")) continue;
    const std::string id = stem.substr(0, stem.size() - 3);
    const fs::path alpha_path = dir / (id + "_alpha.png");
    if (!fs::exists(alpha_path)) {
      throw std::runtime_error("foreground " + id + " has no " +
                               alpha_path.filename().string());
    }
    ForegroundAsset asset{id, read_rgb(path), read_matte(alpha_path)};
    require_same_size(asset.fg.ch[0], asset.alpha, ("foreground " + id).c_str());
    out.push_back(std::move(asset));
  }
  if (out.empty()) throw std::runtime_error("no <id>_fg.png files in " + dir.string());
  return out;
}

std::vector<Background> load_backgrounds(const fs::path& dir) {
  std::vector<Background> out;
  for (const auto& path : sorted_pngs(dir)) {
    out.push_back({path.stem().string(), read_rgb(path)});
  }
  if (out.empty()) throw std::runtime_error("no backgrounds in " + dir.string());
  return out;
}

void write_dataset(const fs::path& dir, const std::vector<CompositeSample>& samples) {
  fs::create_directories(dir);
  json manifest = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const std::string name = sample_dir_name(i);
    const fs::path sdir = dir / name;
    fs::create_directories(sdir);
    write_rgb(sdir / "image.png", s.image);
    write_trimap(sdir / "trimap.png", s.trimap);
    write_matte(sdir / "alpha.png", s.alpha, 16);
    write_rgb(sdir / "fg.png", s.fg);
    write_rgb(sdir / "bg.png", s.bg);
    manifest.push_back({{"dir", name},
                        {"fg_id", s.provenance.fg_id},
                        {"bg_id", s.provenance.bg_id},
                        {"seed", s.provenance.seed},
                        {"dilation", s.provenance.dilation}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << json{{"samples", manifest}}.dump(2) << '\n';
}

std::vector<CompositeSample> read_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw std::runtime_error("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest.json: " + std::string(e.what()));
  }
  std::vector<CompositeSample> out;
  for (const auto& entry : manifest.at("samples")) {
    const fs::path sdir = dir / entry.at("dir").get<std::string>();
    CompositeSample s;
    s.fg = read_rgb(sdir / "fg.png");
    s.bg = read_rgb(sdir / "bg.png");
    s.alpha = read_matte(sdir / "alpha.png");
    s.trimap = read_trimap(sdir / "trimap.png").trimap;
    s.image = composite(s.fg, s.bg, s.alpha);
    s.provenance = {entry.at("fg_id").get<std::string>(),
                    entry.at("bg_id").get<std::string>(),
                    entry.at("seed").get<std::uint64_t>(),
                    entry.at("dilation").get<int>()};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mattekit::io
