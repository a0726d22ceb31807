#include "mattekit/compositing.hpp"
#include "mattekit/dataset.hpp"

#include <stdexcept>

namespace mattekit {

namespace {

Rgb crop_rgb(const Rgb& src, Eigen::Index top, Eigen::Index left,
             Eigen::Index h, Eigen::Index w) {
  Rgb out;
  for (int c = 0; c < 3; ++c) out.ch[c] = src.ch[c].block(top, left, h, w);
  return out;
}

Rgb resize_rgb(const Rgb& src, Eigen::Index h, Eigen::Index w) {
  Rgb out;
  for (int c = 0; c < 3; ++c) out.ch[c] = resize_bilinear(src.ch[c], h, w);
  return out;
}

Rgb flip_rgb(const Rgb& src) {
  Rgb out;
  for (int c = 0; c < 3; ++c) out.ch[c] = flip_horizontal(src.ch[c]);
  return out;
}

}  // namespace

CompositeSample flip_sample(const CompositeSample& s) {
  CompositeSample out;
  out.image = flip_rgb(s.image);
  out.trimap = s.trimap.rowwise().reverse();
  out.alpha = flip_horizontal(s.alpha);
  out.fg = flip_rgb(s.fg);
  out.bg = flip_rgb(s.bg);
  out.provenance = s.provenance;
  return out;
}

CompositeSample augment_crop(const CompositeSample& sample,
                             const DatasetConfig& cfg, Rng& rng,
                             const AugmentOptions& options) {
  cfg.validate();
  int dilation = sample.provenance.dilation;
  Trimap trimap = sample.trimap;
  if (options.random_dilation) {
    DrawnTrimap drawn = make_trimap(sample.alpha, cfg.d_min, cfg.d_max, rng);
    trimap = std::move(drawn.trimap);
    dilation = drawn.dilation;
  }

  const Eigen::Index rows = sample.rows();
  const Eigen::Index cols = sample.cols();
  const Mask unknown = unknown_mask(trimap);
  const Eigen::Index unknown_count = unknown.count();
  if (unknown_count == 0) {
    throw std::invalid_argument("augment_crop: sample " +
                                sample.provenance.fg_id + "/" +
                                sample.provenance.bg_id +
                                " has no unknown pixel");
  }

  const int crop =
      options.multi_scale
          ? cfg.crop_sizes[static_cast<std::size_t>(
                uniform_int(rng, 0, static_cast<int>(cfg.crop_sizes.size()) - 1))]
          : cfg.train_size;

  Eigen::Index cy = 0;
  Eigen::Index cx = 0;
  if (options.center_on_unknown) {
    Eigen::Index pick = uniform_int(rng, 0, static_cast<int>(unknown_count - 1));
    for (Eigen::Index k = 0; k < rows * cols; ++k) {
      if (unknown(k / cols, k % cols) && pick-- == 0) {
        cy = k / cols;
        cx = k % cols;
        break;
      }
    }
  } else {
    cy = uniform_int(rng, 0, static_cast<int>(rows - 1));
    cx = uniform_int(rng, 0, static_cast<int>(cols - 1));
  }

  const Eigen::Index ch = std::min<Eigen::Index>(crop, rows);
  const Eigen::Index cw = std::min<Eigen::Index>(crop, cols);
  const Eigen::Index top = std::clamp<Eigen::Index>(cy - ch / 2, 0, rows - ch);
  const Eigen::Index left = std::clamp<Eigen::Index>(cx - cw / 2, 0, cols - cw);

  CompositeSample out;
  out.image = crop_rgb(sample.image, top, left, ch, cw);
  out.fg = crop_rgb(sample.fg, top, left, ch, cw);
  out.bg = crop_rgb(sample.bg, top, left, ch, cw);
  out.alpha = sample.alpha.block(top, left, ch, cw);
  out.trimap = trimap.block(top, left, ch, cw);
  out.provenance = sample.provenance;
  out.provenance.dilation = dilation;

  const Eigen::Index target = cfg.train_size;
  if (ch != target || cw != target) {
    out.fg = resize_rgb(out.fg, target, target);
    out.bg = resize_rgb(out.bg, target, target);
    out.alpha = resize_bilinear(out.alpha, target, target).max(0.0f).min(1.0f);
    // Re-composite so the resized layers still satisfy I = aF + (1-a)B.
    out.image = composite(out.fg, out.bg, out.alpha);
    out.trimap = make_trimap(out.alpha, dilation);
  }

  const bool flip = options.random_flip && (rng() & 1u);
  return flip ? flip_sample(out) : out;
}

}  // namespace mattekit
