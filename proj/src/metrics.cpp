#include "mattekit/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mattekit {

namespace {

using PlaneD = PlaneT<double>;

template <typename Scalar>
void check_inputs(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                  const Mask& unknown, const char* what) {
  require_same_size(pred, gt, what);
  require_same_size(pred, unknown, what);
  if (!unknown.any()) {
    throw std::invalid_argument(std::string(what) + ": empty unknown region");
  }
}

// Disjoint-set forest over pixel indices; roots keep the smallest index.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Largest 4-connected component of `mask`; ties go to the component whose
// first pixel comes earliest in row-major order.
Mask largest_component(const Mask& mask) {
  const Eigen::Index h = mask.rows();
  const Eigen::Index w = mask.cols();
  const auto n = static_cast<std::size_t>(h * w);
  DisjointSets sets(n);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      const auto i = static_cast<std::size_t>(y * w + x);
      if (x + 1 < w && mask(y, x + 1)) sets.unite(i, i + 1);
      if (y + 1 < h && mask(y + 1, x)) sets.unite(i, i + static_cast<std::size_t>(w));
    }
  }
  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask(static_cast<Eigen::Index>(i) / w, static_cast<Eigen::Index>(i) % w)) {
      ++size[sets.find(i)];
    }
  }
  std::size_t best = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (size[i] > 0 && (best == n || size[i] > size[best])) best = i;
  }
  Mask out = Mask::Constant(h, w, false);
  if (best == n) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index y = static_cast<Eigen::Index>(i) / w;
    const Eigen::Index x = static_cast<Eigen::Index>(i) % w;
    out(y, x) = mask(y, x) && sets.find(i) == best;
  }
  return out;
}

}  // namespace

template <typename Scalar>
SadValue sad(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
             const Mask& unknown) {
  check_inputs(pred, gt, unknown, "sad");
  const PlaneD diff = (pred.template cast<double>() - gt.template cast<double>()).abs();
  const double raw = unknown.select(diff, 0.0).sum();
  return {raw, raw / 1000.0};
}

template <typename Scalar>
double mse(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
           const Mask& unknown) {
  check_inputs(pred, gt, unknown, "mse");
  const PlaneD diff = pred.template cast<double>() - gt.template cast<double>();
  return unknown.select(diff.square(), 0.0).sum() / double(unknown.count());
}

GaussianDerivativeKernels gaussian_derivative_kernels(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian kernels: sigma must be > 0");
  GaussianDerivativeKernels k;
  k.radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int taps = 2 * k.radius + 1;
  k.smooth.resize(taps);
  k.derivative.resize(taps);
  double smooth_sum = 0;
  double ramp_response = 0;
  for (int i = -k.radius; i <= k.radius; ++i) {
    const double g = std::exp(-0.5 * i * i / (sigma * sigma));
    k.smooth[i + k.radius] = g;
    k.derivative[i + k.radius] = i * g;
    smooth_sum += g;
    ramp_response += double(i) * i * g;
  }
  for (auto& v : k.smooth) v /= smooth_sum;
  for (auto& v : k.derivative) v /= ramp_response;
  return k;
}

template <typename Scalar>
PlaneD gradient_magnitude(const PlaneT<Scalar>& image, double sigma) {
  const auto k = gaussian_derivative_kernels(sigma);
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  const PlaneD src = image.template cast<double>();
  auto clampi = [](Eigen::Index v, Eigen::Index n) {
    return std::clamp<Eigen::Index>(v, 0, n - 1);
  };
  // Horizontal pass: derivative for gx, smoothing for gy.
  PlaneD dx(h, w), sx(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double d = 0, s = 0;
      for (int t = -k.radius; t <= k.radius; ++t) {
        const double v = src(y, clampi(x + t, w));
        d += k.derivative[t + k.radius] * v;
        s += k.smooth[t + k.radius] * v;
      }
      dx(y, x) = d;
      sx(y, x) = s;
    }
  }
  PlaneD out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double gx = 0, gy = 0;
      for (int t = -k.radius; t <= k.radius; ++t) {
        const Eigen::Index yy = clampi(y + t, h);
        gx += k.smooth[t + k.radius] * dx(yy, x);
        gy += k.derivative[t + k.radius] * sx(yy, x);
      }
      out(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

template <typename Scalar>
double gradient_error(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                      const Mask& unknown, const MetricParams& params) {
  check_inputs(pred, gt, unknown, "gradient_error");
  const PlaneD gp = gradient_magnitude(pred, params.gradient_sigma);
  const PlaneD gg = gradient_magnitude(gt, params.gradient_sigma);
  const PlaneD term = (gp - gg).abs().pow(params.gradient_power);
  return unknown.select(term, 0.0).sum();
}

template <typename Scalar>
PlaneD connectivity_levels(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                           double step) {
  require_same_size(pred, gt, "connectivity_levels");
  if (!(step > 0 && step <= 1)) {
    throw std::invalid_argument("connectivity: step must lie in (0, 1]");
  }
  const int levels = static_cast<int>(std::lround(1.0 / step));
  const PlaneD p = pred.template cast<double>();
  const PlaneD g = gt.template cast<double>();
  PlaneD level = PlaneD::Constant(p.rows(), p.cols(), -1.0);
  for (int k = 1; k <= levels; ++k) {
    const double t = k * step;
    const Mask omega = largest_component((p >= t) && (g >= t));
    const Mask leaving = (level < 0.0) && !omega;
    level = leaving.select(PlaneD::Constant(p.rows(), p.cols(), (k - 1) * step), level);
  }
  return (level < 0.0).select(PlaneD::Ones(p.rows(), p.cols()), level);
}

template <typename Scalar>
double connectivity_error(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                          const Mask& unknown, const MetricParams& params) {
  check_inputs(pred, gt, unknown, "connectivity_error");
  const PlaneD level = connectivity_levels(pred, gt, params.connectivity_step);
  const double theta = params.connectivity_theta;
  auto phi = [&](const PlaneT<Scalar>& a) {
    const PlaneD d = a.template cast<double>() - level;
    return PlaneD(1.0 - (d >= theta).select(d, 0.0));
  };
  const PlaneD term = (phi(pred) - phi(gt)).abs().pow(params.connectivity_power);
  return unknown.select(term, 0.0).sum();
}

template <typename Scalar>
MetricValues evaluate_all(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& gt,
                          const Mask& unknown, const MetricParams& params) {
  return {sad(pred, gt, unknown), mse(pred, gt, unknown),
          gradient_error(pred, gt, unknown, params),
          connectivity_error(pred, gt, unknown, params)};
}

#define MATTEKIT_INSTANTIATE_METRICS(T)                                        \
  template SadValue sad(const PlaneT<T>&, const PlaneT<T>&, const Mask&);      \
  template double mse(const PlaneT<T>&, const PlaneT<T>&, const Mask&);        \
  template PlaneD gradient_magnitude(const PlaneT<T>&, double);                \
  template double gradient_error(const PlaneT<T>&, const PlaneT<T>&,           \
                                 const Mask&, const MetricParams&);            \
  template PlaneD connectivity_levels(const PlaneT<T>&, const PlaneT<T>&,      \
                                      double);                                 \
  template double connectivity_error(const PlaneT<T>&, const PlaneT<T>&,       \
                                     const Mask&, const MetricParams&);        \
  template MetricValues evaluate_all(const PlaneT<T>&, const PlaneT<T>&,       \
                                     const Mask&, const MetricParams&);

MATTEKIT_INSTANTIATE_METRICS(float)
MATTEKIT_INSTANTIATE_METRICS(double)

#undef MATTEKIT_INSTANTIATE_METRICS

}  // namespace mattekit
