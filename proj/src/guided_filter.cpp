#include "mattekit/guided_filter.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace mattekit {

namespace {

using PlaneD = PlaneT<double>;

PlaneD box(const PlaneD& image, int r) {
  const Eigen::Index h = image.rows();
  const Eigen::Index w = image.cols();
  const auto sat = integral_image(image);
  PlaneD out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index y0 = std::max<Eigen::Index>(0, y - r);
    const Eigen::Index y1 = std::min<Eigen::Index>(h, y + r + 1);
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - r);
      const Eigen::Index x1 = std::min<Eigen::Index>(w, x + r + 1);
      const double sum = sat(y1, x1) - sat(y0, x1) - sat(y1, x0) + sat(y0, x0);
      out(y, x) = sum / double((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

}  // namespace

void GuidedFilterConfig::validate() const {
  if (radius < 0) throw std::invalid_argument("guided filter: radius must be >= 0");
  if (!(eps >= 0)) throw std::invalid_argument("guided filter: eps must be >= 0");
}

template <typename Scalar>
PlaneT<Scalar> box_filter(const PlaneT<Scalar>& image, int radius) {
  if (radius < 0) throw std::invalid_argument("box_filter: radius must be >= 0");
  if (radius == 0) return image;
  return box(image.template cast<double>(), radius).template cast<Scalar>();
}

template <typename Scalar>
PlaneT<Scalar> guided_filter(const PlaneT<Scalar>& guide,
                             const PlaneT<Scalar>& input,
                             const GuidedFilterConfig& cfg) {
  cfg.validate();
  require_same_size(guide, input, "guided_filter");
  const int r = cfg.radius;
  const PlaneD I = guide.template cast<double>();
  const PlaneD p = input.template cast<double>();
  const PlaneD mean_i = box(I, r);
  const PlaneD mean_p = box(p, r);
  const PlaneD var = box(I * I, r) - mean_i * mean_i;
  const PlaneD cov = box(I * p, r) - mean_i * mean_p;
  const PlaneD denom = var + cfg.eps;
  const PlaneD a = (denom > 0.0).select(cov / denom, 0.0);
  const PlaneD b = mean_p - a * mean_i;
  const PlaneD q = box(a, r) * I + box(b, r);
  return q.max(0.0).min(1.0).template cast<Scalar>();
}

template <typename Scalar>
PlaneT<Scalar> guided_filter(const RgbT<Scalar>& guide,
                             const PlaneT<Scalar>& input,
                             const GuidedFilterConfig& cfg) {
  cfg.validate();
  require_same_size(guide, input, "guided_filter");
  const int r = cfg.radius;
  const Eigen::Index h = input.rows();
  const Eigen::Index w = input.cols();
  std::array<PlaneD, 3> I;
  std::array<PlaneD, 3> mean_i;
  for (int c = 0; c < 3; ++c) {
    I[c] = guide.ch[c].template cast<double>();
    mean_i[c] = box(I[c], r);
  }
  const PlaneD p = input.template cast<double>();
  const PlaneD mean_p = box(p, r);
  std::array<PlaneD, 3> cov_ip;
  for (int c = 0; c < 3; ++c) cov_ip[c] = box(I[c] * p, r) - mean_i[c] * mean_p;
  std::array<std::array<PlaneD, 3>, 3> sigma;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      sigma[i][j] = box(I[i] * I[j], r) - mean_i[i] * mean_i[j];
      if (j != i) sigma[j][i] = sigma[i][j];
    }
  }

  std::array<PlaneD, 3> a;
  for (auto& plane : a) plane.resize(h, w);
  PlaneD b(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Eigen::Matrix3d s;
      Eigen::Vector3d cov;
      for (int i = 0; i < 3; ++i) {
        cov(i) = cov_ip[i](y, x);
        for (int j = 0; j < 3; ++j) s(i, j) = sigma[i][j](y, x);
      }
      s.diagonal().array() += cfg.eps;
      const Eigen::FullPivLU<Eigen::Matrix3d> lu(s);
      const Eigen::Vector3d coef =
          lu.isInvertible() ? Eigen::Vector3d(lu.solve(cov)) : Eigen::Vector3d::Zero();
      double bias = mean_p(y, x);
      for (int c = 0; c < 3; ++c) {
        a[c](y, x) = coef(c);
        bias -= coef(c) * mean_i[c](y, x);
      }
      b(y, x) = bias;
    }
  }
  PlaneD q = box(b, r);
  for (int c = 0; c < 3; ++c) q += box(a[c], r) * I[c];
  return q.max(0.0).min(1.0).template cast<Scalar>();
}

#define MATTEKIT_INSTANTIATE_GUIDED(T)                                        \
  template PlaneT<T> box_filter(const PlaneT<T>&, int);                       \
  template PlaneT<T> guided_filter(const PlaneT<T>&, const PlaneT<T>&,        \
                                   const GuidedFilterConfig&);                \
  template PlaneT<T> guided_filter(const RgbT<T>&, const PlaneT<T>&,          \
                                   const GuidedFilterConfig&);

MATTEKIT_INSTANTIATE_GUIDED(float)
MATTEKIT_INSTANTIATE_GUIDED(double)

#undef MATTEKIT_INSTANTIATE_GUIDED

}  // namespace mattekit
