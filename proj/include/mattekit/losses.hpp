#pragma once

#include "mattekit/image.hpp"

namespace mattekit {

struct LossConfig {
  double epsilon = 1e-6;
  /// Weight of the alpha-prediction term; the compositional term gets 1 - w.
  double alpha_weight = 0.5;

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

template <typename Scalar>
struct LossValue {
  Scalar value = 0;
  PlaneT<Scalar> grad;  // d value / d prediction
};

/// Charbonnier derivative (a_p - a_g) / sqrt((a_p - a_g)^2 + eps^2).
template <typename Scalar>
Scalar charbonnier_derivative(Scalar diff, Scalar epsilon) {
  using std::sqrt;
  return diff / sqrt(diff * diff + epsilon * epsilon);
}

/// Mean over UNKNOWN pixels of sqrt((a_p - a_g)^2 + eps^2).
template <typename Scalar>
LossValue<Scalar> alpha_prediction_loss(const PlaneT<Scalar>& pred,
                                        const PlaneT<Scalar>& gt,
                                        const Mask& unknown,
                                        const LossConfig& cfg);

/// Mean over UNKNOWN pixels and the three channels of
/// sqrt((c_p - c_g)^2 + eps^2), with c_p = a_p F + (1 - a_p) B.
template <typename Scalar>
LossValue<Scalar> compositional_loss(const PlaneT<Scalar>& pred_alpha,
                                     const RgbT<Scalar>& fg,
                                     const RgbT<Scalar>& bg,
                                     const RgbT<Scalar>& image,
                                     const Mask& unknown, const LossConfig& cfg);

template <typename Scalar>
struct OverallLoss {
  Scalar alpha = 0;
  Scalar compositional = 0;
  Scalar overall = 0;
  PlaneT<Scalar> grad;
};

/// w * L_alpha + (1 - w) * L_c on the sample's UNKNOWN region.
template <typename Scalar>
OverallLoss<Scalar> overall_loss(const PlaneT<Scalar>& pred,
                                 const PlaneT<Scalar>& gt_alpha,
                                 const RgbT<Scalar>& fg, const RgbT<Scalar>& bg,
                                 const RgbT<Scalar>& image, const Mask& unknown,
                                 const LossConfig& cfg);

}  // namespace mattekit
