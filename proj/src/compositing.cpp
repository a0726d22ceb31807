#include "mattekit/compositing.hpp"

#include <stdexcept>

namespace mattekit {

Rgb composite(const Rgb& fg, const Rgb& bg, const Matte& alpha) {
  require_same_size(fg, bg, "composite(fg, bg)");
  require_same_size(fg, alpha, "composite(fg, alpha)");
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    out.ch[c] = (alpha * fg.ch[c] + (1.0f - alpha) * bg.ch[c])
                    .max(0.0f)
                    .min(1.0f);
  }
  return out;
}

Mask erode(const Mask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("erode: negative radius");
  if (radius == 0) return mask;
  const auto sat = integral_image(mask.cast<double>());
  const Eigen::Index h = mask.rows();
  const Eigen::Index w = mask.cols();
  Mask out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index y0 = std::max<Eigen::Index>(0, y - radius);
    const Eigen::Index y1 = std::min<Eigen::Index>(h, y + radius + 1);
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - radius);
      const Eigen::Index x1 = std::min<Eigen::Index>(w, x + radius + 1);
      const double count = sat(y1, x1) - sat(y0, x1) - sat(y1, x0) + sat(y0, x0);
      out(y, x) = count == double((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

Trimap make_trimap(const Matte& alpha, int dilation) {
  if (dilation < 0) throw std::invalid_argument("make_trimap: negative dilation");
  const Mask fg = erode(alpha >= 1.0f - kPureAlphaTolerance, dilation);
  const Mask bg = erode(alpha <= kPureAlphaTolerance, dilation);
  Trimap out = Trimap::Constant(alpha.rows(), alpha.cols(), trimap_code::kUnknown);
  out = fg.select(Trimap::Constant(alpha.rows(), alpha.cols(), trimap_code::kForeground), out);
  out = bg.select(Trimap::Constant(alpha.rows(), alpha.cols(), trimap_code::kBackground), out);
  return out;
}

DrawnTrimap make_trimap(const Matte& alpha, int d_min, int d_max, Rng& rng) {
  if (d_min < 0 || d_max < d_min) {
    throw std::invalid_argument("make_trimap: need 0 <= d_min <= d_max");
  }
  const int d = uniform_int(rng, d_min, d_max);
  return {make_trimap(alpha, d), d};
}

}  // namespace mattekit
