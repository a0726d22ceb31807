#pragma once

#include "mattekit/image.hpp"

#include <vector>

namespace mattekit {

/// Settings of the four matting error measures, written into every report.
struct MetricParams {
  double gradient_sigma = 1.4;
  double gradient_power = 2.0;
  double connectivity_step = 0.1;
  double connectivity_theta = 0.15;
  double connectivity_power = 1.0;

  friend bool operator==(const MetricParams&, const MetricParams&) = default;
};

struct SadValue {
  double raw = 0;
  double kilo = 0;  // raw / 1000
};

/// Sum of |pred - gt| over UNKNOWN pixels.
template <typename Scalar>
SadValue sad(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
             const Mask& unknown);

/// Mean of (pred - gt)^2 over UNKNOWN pixels.
template <typename Scalar>
double mse(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
           const Mask& unknown);

/// 1-D Gaussian and its derivative, truncated at ceil(3 sigma). The smoothing
/// taps sum to 1; the derivative taps are scaled so a unit ramp yields
/// exactly 1.
struct GaussianDerivativeKernels {
  int radius = 0;
  std::vector<double> smooth;
  std::vector<double> derivative;
};

GaussianDerivativeKernels gaussian_derivative_kernels(double sigma);

/// Per-pixel gradient magnitude from separable Gaussian-derivative filtering
/// with edge replication.
template <typename Scalar>
PlaneT<double> gradient_magnitude(const PlaneT<Scalar>& image, double sigma);

/// Sum over UNKNOWN pixels of | |grad pred| - |grad gt| |^q.
template <typename Scalar>
double gradient_error(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                      const Mask& unknown, const MetricParams& params = {});

/// Threshold level l_i at which each pixel leaves the largest 4-connected
/// component of {pred >= t} & {gt >= t}; pixels that never leave get 1.
template <typename Scalar>
PlaneT<double> connectivity_levels(const PlaneT<Scalar>& pred,
                                   const PlaneT<Scalar>& gt, double step);

/// Sum over UNKNOWN pixels of |phi(pred) - phi(gt)|^q with
/// phi = 1 - d [d >= theta], d = alpha - l.
template <typename Scalar>
double connectivity_error(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                          const Mask& unknown, const MetricParams& params = {});

struct MetricValues {
  SadValue sad;
  double mse = 0;
  double gradient = 0;
  double connectivity = 0;
};

template <typename Scalar>
MetricValues evaluate_all(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                          const Mask& unknown, const MetricParams& params = {});

}  // namespace mattekit
