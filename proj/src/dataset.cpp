#include "mattekit/dataset.hpp"

#include "mattekit/compositing.hpp"
#include "mattekit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace mattekit {

void DatasetConfig::validate() const {
  if (backgrounds_per_fg < 1) {
    throw std::invalid_argument("dataset: backgrounds_per_fg must be >= 1");
  }
  if (d_min < 0 || d_max < d_min) {
    throw std::invalid_argument("dataset: need 0 <= d_min <= d_max");
  }
  if (crop_sizes.empty()) {
    throw std::invalid_argument("dataset: crop_sizes must be non-empty");
  }
  for (int s : crop_sizes) {
    if (s < 1) throw std::invalid_argument("dataset: crop sizes must be >= 1");
  }
  if (train_size < 1) throw std::invalid_argument("dataset: train_size must be >= 1");
  if (!(max_bg_upscale >= 1.0)) {
    throw std::invalid_argument("dataset: max_bg_upscale must be >= 1");
  }
}

bool fit_background(const Rgb& bg, Eigen::Index rows, Eigen::Index cols,
                    double max_upscale, Rgb& out) {
  if (bg.rows() < 1 || bg.cols() < 1) return false;
  const double scale = std::max(double(rows) / double(bg.rows()),
                                double(cols) / double(bg.cols()));
  if (scale > max_upscale) return false;
  Rgb scaled = bg;
  if (scale != 1.0) {
    const Eigen::Index h =
        std::max<Eigen::Index>(rows, std::lround(double(bg.rows()) * scale));
    const Eigen::Index w =
        std::max<Eigen::Index>(cols, std::lround(double(bg.cols()) * scale));
    for (int c = 0; c < 3; ++c) scaled.ch[c] = resize_bilinear(bg.ch[c], h, w);
  }
  const Eigen::Index top = (scaled.rows() - rows) / 2;
  const Eigen::Index left = (scaled.cols() - cols) / 2;
  out = Rgb();
  for (int c = 0; c < 3; ++c) {
    out.ch[c] = scaled.ch[c].block(top, left, rows, cols);
  }
  return true;
}

std::vector<CompositeSample> synthesize_dataset(
    std::span<const ForegroundAsset> fgs, std::span<const Background> bgs,
    const DatasetConfig& cfg, std::vector<std::string>* warnings) {
  cfg.validate();
  if (fgs.empty() || bgs.empty()) {
    throw std::invalid_argument("synthesize_dataset: need at least one foreground and one background");
  }
  for (const auto& fg : fgs) {
    require_same_size(fg.fg, fg.alpha, ("foreground " + fg.id).c_str());
    if ((fg.alpha < 0.0f).any() || (fg.alpha > 1.0f).any()) {
      throw std::invalid_argument("foreground " + fg.id + ": alpha outside [0, 1]");
    }
  }

  struct Job {
    std::size_t fg;
    std::size_t bg;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  const auto n = static_cast<std::size_t>(cfg.backgrounds_per_fg);
  jobs.reserve(fgs.size() * n);
  for (std::size_t i = 0; i < fgs.size(); ++i) {
    const std::uint64_t fg_hash = hash_string(fgs[i].id);
    Rng pick(derive_seed(cfg.seed, fg_hash));
    std::vector<std::size_t> chosen(n);
    if (n <= bgs.size()) {
      std::vector<std::size_t> all(bgs.size());
      std::iota(all.begin(), all.end(), 0);
      // Partial Fisher-Yates with our own integer draws.
      for (std::size_t k = 0; k < n; ++k) {
        const auto j = static_cast<std::size_t>(
            uniform_int(pick, static_cast<int>(k), static_cast<int>(all.size() - 1)));
        std::swap(all[k], all[j]);
        chosen[k] = all[k];
      }
    } else {
      for (auto& c : chosen) {
        c = static_cast<std::size_t>(uniform_int(pick, 0, static_cast<int>(bgs.size() - 1)));
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      jobs.push_back({i, chosen[k],
                      derive_seed(cfg.seed, fg_hash, hash_string(bgs[chosen[k]].id), k)});
    }
  }

  std::vector<std::optional<CompositeSample>> slots(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const ForegroundAsset& fg = fgs[job.fg];
    Rgb bg;
    if (!fit_background(bgs[job.bg].image, fg.alpha.rows(), fg.alpha.cols(),
                        cfg.max_bg_upscale, bg)) {
      return;
    }
    Rng rng(job.seed);
    DrawnTrimap tri = make_trimap(fg.alpha, cfg.d_min, cfg.d_max, rng);
    CompositeSample s;
    s.image = composite(fg.fg, bg, fg.alpha);
    s.trimap = std::move(tri.trimap);
    s.alpha = fg.alpha;
    s.fg = fg.fg;
    s.bg = std::move(bg);
    s.provenance = {fg.id, bgs[job.bg].id, job.seed, tri.dilation};
    slots[j] = std::move(s);
  });

  std::vector<CompositeSample> out;
  out.reserve(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (slots[j]) {
      out.push_back(std::move(*slots[j]));
    } else if (warnings) {
      warnings->push_back("background " + bgs[jobs[j].bg].id +
                          " too small for foreground " + fgs[jobs[j].fg].id +
                          "; skipped");
    }
  }
  return out;
}

EpochStream::EpochStream(const std::vector<CompositeSample>& dataset, int epoch,
                         const DatasetConfig& cfg, const AugmentOptions& options)
    : dataset_(&dataset),
      cfg_(cfg),
      options_(options),
      epoch_seed_(derive_seed(cfg.seed, 0x65706f6368ull,
                              static_cast<std::uint64_t>(
                                  options.regenerate_each_epoch ? epoch : 0))),
      order_(dataset.size()) {
  if (dataset.empty()) throw std::invalid_argument("regenerate_epoch: empty dataset");
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng(epoch_seed_);
  for (std::size_t i = order_.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i - 1)));
    std::swap(order_[i - 1], order_[j]);
  }
}

CompositeSample EpochStream::at(std::size_t i) const {
  Rng rng(derive_seed(epoch_seed_, i));
  return augment_crop((*dataset_)[order_.at(i)], cfg_, rng, options_);
}

EpochStream regenerate_epoch(const std::vector<CompositeSample>& dataset,
                             int epoch, const DatasetConfig& cfg,
                             const AugmentOptions& options) {
  return EpochStream(dataset, epoch, cfg, options);
}

}  // namespace mattekit
