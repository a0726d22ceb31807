#include "mattekit/compositing.hpp"
#include "mattekit/sweep.hpp"
#include "support/toy.hpp"

#include <doctest.h>

#include <atomic>
#include <set>

using namespace mattekit;

namespace {

Predictor oracle_predictor(const std::vector<CompositeSample>& data) {
  // Returns the ground truth of whichever sample owns this image.
  return [&data](const Rgb& image, const Trimap&) -> Matte {
    for (const auto& s : data) {
      if (s.image.rows() == image.rows() && (s.image.ch[0] == image.ch[0]).all() &&
          (s.image.ch[2] == image.ch[2]).all())
        return s.alpha;
    }
    throw std::runtime_error("unknown image");
  };
}

std::vector<CompositeSample> sweep_data() {
  const auto fgs = synth::foregrounds(3, 48, 48, 11);
  const auto bgs = synth::backgrounds(3, 48, 48, 11);
  auto cfg = toy::dataset_config(48, 11);
  cfg.backgrounds_per_fg = 2;
  return synthesize_dataset(fgs, bgs, cfg);
}

}  // namespace

TEST_CASE("subset keeps one sample per foreground") {
  const auto data = sweep_data();
  SweepConfig cfg;
  const auto idx = sweep_subset(data, cfg);
  REQUIRE(idx.size() == 3);
  std::set<std::string> ids;
  for (auto i : idx) ids.insert(data[i].provenance.fg_id);
  CHECK(ids.size() == 3);
  CHECK(sweep_subset(data, cfg) == idx);
  cfg.one_per_foreground = false;
  CHECK(sweep_subset(data, cfg).size() == data.size());
}

TEST_CASE("oracle scores zero everywhere; baseline grows with d") {
  const auto data = sweep_data();
  const SweepConfig cfg;
  const auto oracle = trimap_sweep(oracle_predictor(data), data, cfg);
  REQUIRE(oracle.aggregates.size() == 7);
  for (const auto& agg : oracle.aggregates) {
    CHECK(agg.values.sad.raw == 0.0);
    CHECK(agg.values.mse == 0.0);
    CHECK(agg.values.gradient == 0.0);
    CHECK(agg.values.connectivity == 0.0);
  }
  CHECK(oracle.rows.size() == 7 * 3);

  const auto base = trimap_sweep(trimap_copy_predictor(), data, cfg);
  REQUIRE(base.aggregates.size() == 7);
  const std::vector<int> ds{1, 4, 7, 10, 13, 16, 19};
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(base.aggregates[k].dilation == ds[k]);
    if (k > 0) CHECK(base.aggregates[k].values.sad.raw >= base.aggregates[k - 1].values.sad.raw);
  }
  CHECK(base.flags.empty());
}

TEST_CASE("trimap-copy baseline values") {
  Trimap t(1, 3);
  t << 0, 128, 255;
  const Matte a = trimap_copy_predictor()(Rgb(1, 3), t);
  CHECK(a(0, 0) == 0.0f);
  CHECK(a(0, 1) == 0.5f);
  CHECK(a(0, 2) == 1.0f);
}

TEST_CASE("predictor failures become flagged missing rows") {
  const auto data = sweep_data();
  SweepConfig cfg;
  cfg.d_list = {2, 5};
  std::atomic<int> calls{0};
  const Predictor failing = [&](const Rgb&, const Trimap&) -> Matte {
    ++calls;
    throw std::runtime_error("boom");
  };
  const auto r = trimap_sweep(failing, data, cfg);
  CHECK(calls == 6);
  REQUIRE(r.rows.size() == 6);
  for (const auto& row : r.rows) {
    CHECK(row.missing);
    CHECK(row.error == "boom");
  }
  CHECK(r.flags.size() >= 6);
  for (const auto& agg : r.aggregates) CHECK(agg.missing);
}

TEST_CASE("sweep config validation") {
  SweepConfig cfg;
  cfg.d_list = {1, 1, 2};
  CHECK_THROWS(cfg.validate());
  cfg.d_list = {};
  CHECK_THROWS(cfg.validate());
  cfg.d_list = {-1, 2};
  CHECK_THROWS(cfg.validate());
}
