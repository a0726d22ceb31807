#include "mattekit/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace mattekit {

void LossConfig::validate() const {
  if (!(epsilon > 0)) throw std::invalid_argument("loss: epsilon must be > 0");
  if (!(alpha_weight >= 0 && alpha_weight <= 1)) {
    throw std::invalid_argument("loss: alpha_weight must lie in [0, 1]");
  }
}

namespace {

Eigen::Index unknown_count(const Mask& unknown, const char* what) {
  const Eigen::Index n = unknown.count();
  if (n == 0) {
    throw std::invalid_argument(std::string(what) +
                                ": trimap has no unknown pixel");
  }
  return n;
}

}  // namespace

template <typename Scalar>
LossValue<Scalar> alpha_prediction_loss(const PlaneT<Scalar>& pred,
                                        const PlaneT<Scalar>& gt,
                                        const Mask& unknown,
                                        const LossConfig& cfg) {
  require_same_size(pred, gt, "alpha_prediction_loss");
  require_same_size(pred, unknown, "alpha_prediction_loss(mask)");
  const Eigen::Index count = unknown_count(unknown, "alpha_prediction_loss");
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(count);

  const PlaneT<Scalar> diff = pred - gt;
  const PlaneT<Scalar> root = (diff.square() + eps * eps).sqrt();
  LossValue<Scalar> out;
  out.value = unknown.select(root, Scalar(0)).sum() * inv;
  out.grad = unknown.select(diff / root, Scalar(0)) * inv;
  return out;
}

template <typename Scalar>
LossValue<Scalar> compositional_loss(const PlaneT<Scalar>& pred_alpha,
                                     const RgbT<Scalar>& fg,
                                     const RgbT<Scalar>& bg,
                                     const RgbT<Scalar>& image,
                                     const Mask& unknown, const LossConfig& cfg) {
  require_same_size(pred_alpha, fg, "compositional_loss(fg)");
  require_same_size(pred_alpha, bg, "compositional_loss(bg)");
  require_same_size(pred_alpha, image, "compositional_loss(image)");
  require_same_size(pred_alpha, unknown, "compositional_loss(mask)");
  const Eigen::Index count = unknown_count(unknown, "compositional_loss");
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(3 * count);

  LossValue<Scalar> out;
  out.grad = PlaneT<Scalar>::Zero(pred_alpha.rows(), pred_alpha.cols());
  for (int c = 0; c < 3; ++c) {
    const PlaneT<Scalar> dfb = fg.ch[c] - bg.ch[c];
    const PlaneT<Scalar> diff = pred_alpha * dfb + bg.ch[c] - image.ch[c];
    const PlaneT<Scalar> root = (diff.square() + eps * eps).sqrt();
    out.value += unknown.select(root, Scalar(0)).sum();
    out.grad += unknown.select(diff / root * dfb, Scalar(0));
  }
  out.value *= inv;
  out.grad *= inv;
  return out;
}

template <typename Scalar>
OverallLoss<Scalar> overall_loss(const PlaneT<Scalar>& pred,
                                 const PlaneT<Scalar>& gt_alpha,
                                 const RgbT<Scalar>& fg, const RgbT<Scalar>& bg,
                                 const RgbT<Scalar>& image, const Mask& unknown,
                                 const LossConfig& cfg) {
  cfg.validate();
  const Scalar w = static_cast<Scalar>(cfg.alpha_weight);
  OverallLoss<Scalar> out;
  auto la = alpha_prediction_loss(pred, gt_alpha, unknown, cfg);
  out.alpha = la.value;
  if (w == Scalar(1)) {
    out.overall = la.value;
    out.grad = std::move(la.grad);
    return out;
  }
  auto lc = compositional_loss(pred, fg, bg, image, unknown, cfg);
  out.compositional = lc.value;
  out.overall = w * la.value + (1 - w) * lc.value;
  out.grad = w * la.grad + (1 - w) * lc.grad;
  return out;
}

#define MATTEKIT_INSTANTIATE_LOSSES(T)                                        \
  template LossValue<T> alpha_prediction_loss(const PlaneT<T>&,               \
                                              const PlaneT<T>&, const Mask&,  \
                                              const LossConfig&);             \
  template LossValue<T> compositional_loss(                                   \
      const PlaneT<T>&, const RgbT<T>&, const RgbT<T>&, const RgbT<T>&,       \
      const Mask&, const LossConfig&);                                        \
  template OverallLoss<T> overall_loss(const PlaneT<T>&, const PlaneT<T>&,    \
                                       const RgbT<T>&, const RgbT<T>&,        \
                                       const RgbT<T>&, const Mask&,           \
                                       const LossConfig&);

MATTEKIT_INSTANTIATE_LOSSES(float)
MATTEKIT_INSTANTIATE_LOSSES(double)

#undef MATTEKIT_INSTANTIATE_LOSSES

}  // namespace mattekit
