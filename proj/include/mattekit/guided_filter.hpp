#pragma once

#include "mattekit/image.hpp"

namespace mattekit {

struct GuidedFilterConfig {
  int radius = 20;
  double eps = 1e-4;

  void validate() const;
  friend bool operator==(const GuidedFilterConfig&, const GuidedFilterConfig&) = default;
};

/// Mean over the (2r+1)^2 window clipped to the image, via a summed-area
/// table. Border pixels divide by the number of pixels actually covered.
template <typename Scalar>
PlaneT<Scalar> box_filter(const PlaneT<Scalar>& image, int radius);

/// Edge-preserving smoothing of `input` with a grayscale guide:
/// a = cov(I, p) / (var(I) + eps), b = mean(p) - a mean(I) per window, output
/// box(a) I + box(b) clamped to [0, 1]. Windows with var(I) + eps == 0 use
/// a = 0.
template <typename Scalar>
PlaneT<Scalar> guided_filter(const PlaneT<Scalar>& guide,
                             const PlaneT<Scalar>& input,
                             const GuidedFilterConfig& cfg);

/// Color-guide form: a = (Sigma + eps I)^-1 cov(I, p) with the 3x3 window
/// covariance Sigma.
template <typename Scalar>
PlaneT<Scalar> guided_filter(const RgbT<Scalar>& guide,
                             const PlaneT<Scalar>& input,
                             const GuidedFilterConfig& cfg);

}  // namespace mattekit
