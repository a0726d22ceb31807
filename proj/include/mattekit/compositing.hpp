#pragma once

#include "mattekit/image.hpp"
#include "mattekit/rng.hpp"

namespace mattekit {

/// Alpha at or above 1 - tau counts as pure foreground, at or below tau as
/// pure background.
inline constexpr float kPureAlphaTolerance = 1e-3f;

/// I = alpha * F + (1 - alpha) * B per pixel and channel.
Rgb composite(const Rgb& fg, const Rgb& bg, const Matte& alpha);

/// Binary erosion by a (2r+1) x (2r+1) square. Pixels outside the image do
/// not constrain the result.
Mask erode(const Mask& mask, int radius);

/// FG = erode(alpha >= 1 - tau, d), BG = erode(alpha <= tau, d), the rest
/// UNKNOWN.
Trimap make_trimap(const Matte& alpha, int dilation);

struct DrawnTrimap {
  Trimap trimap;
  int dilation = 0;
};

/// Dilation drawn uniformly from [d_min, d_max].
DrawnTrimap make_trimap(const Matte& alpha, int d_min, int d_max, Rng& rng);

}  // namespace mattekit
