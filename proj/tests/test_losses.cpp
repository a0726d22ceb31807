#include "mattekit/losses.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mattekit;
using PlaneD = PlaneT<double>;
using RgbD = RgbT<double>;

namespace {

Mask all_unknown(int h, int w) { return Mask::Constant(h, w, true); }

}  // namespace

TEST_CASE("alpha loss floors at epsilon per pixel when pred equals gt") {
  std::mt19937_64 rng(1);
  const PlaneD a = oracle::random_plane(6, 7, rng);
  const auto l = alpha_prediction_loss(a, a, all_unknown(6, 7), LossConfig{});
  CHECK(l.value == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(l.grad.abs().maxCoeff() == 0.0);
}

TEST_CASE("alpha loss of a single unit error") {
  PlaneD p = PlaneD::Constant(1, 1, 1.0), g = PlaneD::Zero(1, 1);
  const auto l = alpha_prediction_loss(p, g, all_unknown(1, 1), LossConfig{});
  CHECK(l.value == doctest::Approx(std::sqrt(1 + 1e-12)).epsilon(1e-15));
  CHECK(l.grad(0, 0) == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("alpha loss gradient follows the closed form") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const double d = u(rng) * std::pow(10.0, -6 * std::abs(u(rng)));
    PlaneD p = PlaneD::Constant(1, 1, 0.5 + d / 2), g = PlaneD::Constant(1, 1, 0.5 - d / 2);
    const auto l = alpha_prediction_loss(p, g, all_unknown(1, 1), LossConfig{});
    const double diff = p(0, 0) - g(0, 0);
    worst = std::max(worst, std::abs(l.grad(0, 0) - diff / std::sqrt(diff * diff + 1e-12)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("losses average over unknown pixels only") {
  std::mt19937_64 rng(3);
  const auto c = gradcheck::loss_case(rng);
  const LossConfig cfg{};
  const auto l = alpha_prediction_loss(c.pred, c.gt, c.unknown, cfg);
  double want = 0;
  for (Eigen::Index y = 0; y < c.gt.rows(); ++y)
    for (Eigen::Index x = 0; x < c.gt.cols(); ++x)
      if (c.unknown(y, x)) want += std::sqrt(std::pow(c.pred(y, x) - c.gt(y, x), 2) + 1e-12);
  CHECK(l.value == doctest::Approx(want / c.unknown.count()).epsilon(1e-14));
  CHECK((l.grad * (!c.unknown).cast<double>()).abs().maxCoeff() == 0.0);

  // Changing pixels outside the unknown region has no effect.
  PlaneD pred2 = c.pred, gt2 = c.gt;
  pred2 = c.unknown.select(pred2, 0.123);
  gt2 = c.unknown.select(gt2, 0.987);
  const auto o1 = overall_loss(c.pred, c.gt, c.fg, c.bg, c.image, c.unknown, cfg);
  RgbD image2 = c.image;
  const auto o2 = overall_loss(pred2, gt2, c.fg, c.bg, image2, c.unknown, cfg);
  CHECK(o1.overall == o2.overall);
}

TEST_CASE("compositional loss floors at epsilon on an exact composite") {
  std::mt19937_64 rng(4);
  const int h = 5, w = 4;
  const PlaneD a = oracle::random_plane(h, w, rng);
  RgbD fg(h, w), bg(h, w), img(h, w);
  for (int k = 0; k < 3; ++k) {
    fg.ch[k] = oracle::random_plane(h, w, rng);
    bg.ch[k] = oracle::random_plane(h, w, rng);
    img.ch[k] = a * fg.ch[k] + (1 - a) * bg.ch[k];
  }
  const auto l = compositional_loss(a, fg, bg, img, all_unknown(h, w), LossConfig{});
  CHECK(l.value == doctest::Approx(1e-6).epsilon(1e-9));
}

TEST_CASE("compositional loss ignores alpha when foreground equals background") {
  std::mt19937_64 rng(5);
  const int h = 4, w = 6;
  RgbD fg(h, w);
  for (int k = 0; k < 3; ++k) fg.ch[k] = oracle::random_plane(h, w, rng);
  const PlaneD pred = oracle::random_plane(h, w, rng);
  const auto l = compositional_loss(pred, fg, fg, fg, all_unknown(h, w), LossConfig{});
  CHECK(l.value == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(l.grad.abs().maxCoeff() == 0.0);
}

TEST_CASE("overall loss weighting") {
  std::mt19937_64 rng(6);
  const auto c = gradcheck::loss_case(rng);
  LossConfig cfg;
  const auto la = alpha_prediction_loss(c.pred, c.gt, c.unknown, cfg);
  const auto lc = compositional_loss(c.pred, c.fg, c.bg, c.image, c.unknown, cfg);
  const auto half = overall_loss(c.pred, c.gt, c.fg, c.bg, c.image, c.unknown, cfg);
  CHECK(half.overall == doctest::Approx((la.value + lc.value) / 2).epsilon(1e-15));
  CHECK(half.alpha == la.value);
  CHECK(half.compositional == lc.value);
  cfg.alpha_weight = 1.0;
  const auto only_alpha = overall_loss(c.pred, c.gt, c.fg, c.bg, c.image, c.unknown, cfg);
  CHECK(only_alpha.overall == la.value);
  CHECK((only_alpha.grad - la.grad).abs().maxCoeff() == 0.0);
}

TEST_CASE("loss finite-difference checks") {
  CHECK(gradcheck::alpha_loss(20, 11) <= 1e-4);
  CHECK(gradcheck::compositional_loss(20, 12) <= 1e-4);
  CHECK(gradcheck::overall_loss(20, 13) <= 1e-4);
}

TEST_CASE("losses reject an empty unknown region and bad configs") {
  const PlaneD a = PlaneD::Zero(3, 3);
  CHECK_THROWS_AS(alpha_prediction_loss(a, a, Mask::Constant(3, 3, false), LossConfig{}),
                  std::invalid_argument);
  LossConfig bad;
  bad.alpha_weight = 1.5;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.epsilon = 0;
  CHECK_THROWS(bad.validate());
}
