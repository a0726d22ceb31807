#include "mattekit/losses.hpp"
#include "mattekit/model.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

#include <doctest.h>

#include <random>

using namespace mattekit;
using PlaneD = PlaneT<double>;
using RgbD = RgbT<double>;

namespace {

RgbD random_rgb(int h, int w, std::mt19937_64& rng) {
  RgbD out(h, w);
  for (auto& c : out.ch) c = oracle::random_plane(h, w, rng);
  return out;
}

Trimap random_trimap(int h, int w, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  const std::uint8_t codes[] = {0, 128, 255};
  Trimap t(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t(y, x) = codes[pick(rng)];
  t(0, 0) = trimap_code::kUnknown;
  return t;
}

// Flat view of selected parameter entries for finite differences.
struct Probe {
  std::size_t tensor;
  Eigen::Index index;
};

std::vector<Probe> pick_probes(ModelParams<double>& m, int count, std::mt19937_64& rng,
                               std::size_t first_tensor = 0) {
  auto tensors = m.all_tensors();
  std::vector<Probe> out;
  std::uniform_int_distribution<std::size_t> tp(first_tensor, tensors.size() - 1);
  for (int i = 0; i < count; ++i) {
    const std::size_t t = tp(rng);
    std::uniform_int_distribution<Eigen::Index> ip(0, tensors[t]->data().size() - 1);
    out.push_back({t, ip(rng)});
  }
  return out;
}

// Zero biases put pre-activations over all-zero unpooled patches exactly on
// the ReLU kink, where finite differences are meaningless; random biases
// move every unit off it.
void randomize_biases(ModelParams<double>& m, std::mt19937_64& rng) {
  for (auto& l : m.layers) {
    l.conv.bias = oracle::random_tensor(l.conv.bias.shape(), rng, -0.05, 0.05);
  }
}

}  // namespace

TEST_CASE("full-scale layer layout") {
  const auto m = build_model<float>(Stage1Config{}, Stage2Config{}, 0);
  REQUIRE(m.layers.size() == 14 + 6 + 1 + 4);
  CHECK(m.stage1.pool_count() == 5);
  CHECK(m.layers[0].name == "encoder.conv1_1");
  CHECK(m.layers[0].conv.weights.shape() == Shape{64, 4, 3, 3});
  CHECK(m.layers[12].name == "encoder.conv5_3");
  CHECK(m.layers[13].name == "encoder.fc6_conv");
  CHECK(m.layers[13].conv.weights.shape() == Shape{4096, 512, 7, 7});
  CHECK(m.layers[14].name == "decoder.conv6");
  CHECK(m.layers[14].conv.weights.shape() == Shape{512, 4096, 5, 5});
  CHECK(m.layers[20].name == "decoder.alpha_pred");
  CHECK(m.layers[20].conv.weights.shape() == Shape{1, 64, 5, 5});
  CHECK_FALSE(m.layers[20].relu);
  CHECK(m.layers[21].conv.weights.shape() == Shape{64, 4, 3, 3});
  CHECK(m.layers[24].conv.weights.shape() == Shape{1, 64, 3, 3});
  CHECK_FALSE(m.layers[24].relu);
  for (int i = 0; i < 20; ++i) CHECK(m.layers[i].relu);
}

TEST_CASE("configs that break the unpool pairing are rejected") {
  Stage1Config bad;
  bad.decoder_widths = {512, 256, 128, 64, 64, 64};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.pool_after = {1, 3, 6, 9};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Stage2Config bad2;
  bad2.widths = {64, 64, 1};
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
  bad2 = {};
  bad2.widths = {64, 64, 64, 2};
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

TEST_CASE("initialization: trimap channel of the first layer is zero, biases zero") {
  const auto m = build_model<double>(toy::stage1(0.125), toy::stage2(0.125), 5);
  const auto& w = m.layers[0].conv.weights;
  for (int o = 0; o < w.shape().n; ++o)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) CHECK(w(o, 3, y, x) == 0.0);
  for (const auto& l : m.layers) CHECK(l.conv.bias.data().cwiseAbs().maxCoeff() == 0.0);
  const auto again = build_model<double>(toy::stage1(0.125), toy::stage2(0.125), 5);
  CHECK(again.layers[7].conv.weights.data() == m.layers[7].conv.weights.data());
  const auto other = build_model<double>(toy::stage1(0.125), toy::stage2(0.125), 6);
  CHECK(other.layers[7].conv.weights.data() != m.layers[7].conv.weights.data());
}

TEST_CASE("stage 1 equals a hand-chained replay of the primitives") {
  std::mt19937_64 rng(1);
  auto m = build_model<double>(toy::stage1(1.0 / 32), toy::stage2(1.0 / 32), 2);
  m.layers[20].conv.bias.data().setConstant(0.5);
  const RgbD img = random_rgb(40, 36, rng);
  const Trimap tri = random_trimap(40, 36, rng);
  const PlaneD got = stage1_forward(img, tri, m);

  Tensor<double> x = pad_to_multiple(stage1_input(img, tri), 32);
  std::vector<PoolIndices> pools;
  const auto& pool_after = m.stage1.pool_after;
  for (int i = 0; i < 14; ++i) {
    x = relu(conv2d(x, m.layers[i].conv));
    if (std::find(pool_after.begin(), pool_after.end(), i) != pool_after.end()) {
      auto r = maxpool2x2(x);
      pools.push_back(r.indices);
      x = r.output;
    }
  }
  for (int k = 0; k < 6; ++k) {
    x = relu(conv2d(x, m.layers[14 + k].conv));
    if (k < 5) x = unpool2x2(x, pools[4 - k]);
  }
  x = conv2d(x, m.layers[20].conv);
  const auto cropped = crop_top_left(x, 40, 36);
  for (int y = 0; y < 40; ++y)
    for (int xx = 0; xx < 36; ++xx)
      CHECK(got(y, xx) == std::clamp(cropped(0, 0, y, xx), 0.0, 1.0));
}

TEST_CASE("odd-sized inputs are padded and cropped back") {
  std::mt19937_64 rng(2);
  const auto m = build_model<float>(toy::stage1(1.0 / 32), toy::stage2(1.0 / 32), 3);
  const RgbD img = random_rgb(67, 53, rng);
  const Trimap tri = random_trimap(67, 53, rng);
  StageTrace<float> trace;
  const auto a = stage1_forward(img.cast<float>(), tri, m, &trace);
  CHECK(a.rows() == 67);
  CHECK(a.cols() == 53);
  CHECK(trace.raw_output.shape() == Shape{1, 1, 96, 64});
  CHECK(a.minCoeff() >= 0.0f);
  CHECK(a.maxCoeff() <= 1.0f);
  CHECK(full_forward(img.cast<float>(), tri, m).rows() == 67);
}

TEST_CASE("zeroed refinement passes stage 1 through bitwise") {
  std::mt19937_64 rng(3);
  auto m = build_model<float>(toy::stage1(1.0 / 16), toy::stage2(1.0 / 16), 4);
  m.layers[20].conv.bias.data().setConstant(0.5f);
  const auto img = random_rgb(33, 47, rng).cast<float>();
  const Trimap tri = random_trimap(33, 47, rng);
  // Default initialization already zeroes the last refinement layer.
  CHECK((full_forward(img, tri, m) == stage1_forward(img, tri, m)).all());
  for (auto* t : m.stage2_tensors()) t->data().setZero();
  CHECK((full_forward(img, tri, m) == stage1_forward(img, tri, m)).all());
}

TEST_CASE("stage 1 gradients match finite differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    auto m = build_model<double>(toy::stage1(1.0 / 32), toy::stage2(1.0 / 32), 10 + trial);
    randomize_biases(m, rng);
    m.layers[20].conv.bias.data().setConstant(0.5);
    const RgbD img = random_rgb(32, 32, rng);
    const Trimap tri = random_trimap(32, 32, rng);
    const PlaneD weight = oracle::random_plane(32, 32, rng, -1, 1);
    StageTrace<double> trace;
    const PlaneD a = stage1_forward(img, tri, m, &trace);
    auto grads = make_gradients(m);
    stage1_backward(m, trace, weight, grads);

    const auto probes = pick_probes(m, 40, rng);
    Eigen::VectorXd analytic(probes.size()), numeric(probes.size());
    auto tensors = m.all_tensors();
    for (std::size_t i = 0; i < probes.size(); ++i) {
      auto& v = tensors[probes[i].tensor]->data()[probes[i].index];
      analytic[i] = grads.tensors[probes[i].tensor].data()[probes[i].index];
      const double keep = v, h = 1e-6;
      v = keep + h;
      const double up = (stage1_forward(img, tri, m) * weight).sum();
      v = keep - h;
      const double down = (stage1_forward(img, tri, m) * weight).sum();
      v = keep;
      numeric[i] = (up - down) / (2 * h);
    }
    CHECK(oracle::relative_error(analytic, numeric) <= 1e-3);
    CHECK(analytic.norm() > 0);
  }
}

TEST_CASE("end-to-end gradients through both stages match finite differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    auto m = build_model<double>(toy::stage1(1.0 / 32), toy::stage2(1.0 / 16), 20 + trial);
    randomize_biases(m, rng);
    m.layers[20].conv.bias.data().setConstant(0.5);
    m.layers.back().conv.weights.data() = 1e-3 * oracle::random_tensor(
        m.layers.back().conv.weights.shape(), rng).data();
    const RgbD img = random_rgb(32, 32, rng);
    const Trimap tri = random_trimap(32, 32, rng);
    const PlaneD gt = oracle::random_plane(32, 32, rng);
    RgbD fg = random_rgb(32, 32, rng), bg = random_rgb(32, 32, rng), comp(32, 32);
    for (int c = 0; c < 3; ++c) comp.ch[c] = gt * fg.ch[c] + (1 - gt) * bg.ch[c];
    const Mask unknown = unknown_mask(tri);
    const LossConfig cfg{};
    auto loss_of = [&](const ModelParams<double>& mm) {
      const PlaneD r = full_forward(img, tri, mm);
      return overall_loss(r, gt, fg, bg, comp, unknown, cfg).overall;
    };

    StageTrace<double> t1, t2;
    const PlaneD a1 = stage1_forward(img, tri, m, &t1);
    const PlaneD a2 = stage2_forward(img, a1, m, &t2);
    const auto l = overall_loss(a2, gt, fg, bg, comp, unknown, cfg);
    auto grads = make_gradients(m);
    stage1_backward(m, t1, stage2_backward(m, t2, l.grad, grads), grads);

    const auto probes = pick_probes(m, 40, rng);
    Eigen::VectorXd analytic(probes.size()), numeric(probes.size());
    auto tensors = m.all_tensors();
    for (std::size_t i = 0; i < probes.size(); ++i) {
      auto& v = tensors[probes[i].tensor]->data()[probes[i].index];
      analytic[i] = grads.tensors[probes[i].tensor].data()[probes[i].index];
      const double keep = v, h = 1e-6;
      v = keep + h;
      const double up = loss_of(m);
      v = keep - h;
      const double down = loss_of(m);
      v = keep;
      numeric[i] = (up - down) / (2 * h);
    }
    CHECK(oracle::relative_error(analytic, numeric) <= 1e-3);
    CHECK(analytic.norm() > 0);
  }
}

TEST_CASE("fingerprint tracks layer shapes") {
  auto a = build_model<float>(toy::stage1(0.25), toy::stage2(0.25), 1);
  auto b = build_model<float>(toy::stage1(0.25), toy::stage2(0.25), 2);
  auto c = build_model<float>(toy::stage1(0.5), toy::stage2(0.5), 1);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
  CHECK(a.cast<double>().fingerprint() == a.fingerprint());
}

TEST_CASE("forward rejects mismatched image and trimap") {
  const auto m = build_model<float>(toy::stage1(1.0 / 32), toy::stage2(1.0 / 32), 1);
  CHECK_THROWS_AS(stage1_forward(Rgb(8, 8), Trimap(Trimap::Zero(8, 9)), m),
                  std::invalid_argument);
}
