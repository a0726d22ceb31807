#include "mattekit/sweep.hpp"

#include "mattekit/compositing.hpp"
#include "mattekit/parallel.hpp"

#include <map>
#include <stdexcept>

namespace mattekit {

void SweepConfig::validate() const {
  if (d_list.empty()) throw std::invalid_argument("sweep: d_list is empty");
  for (std::size_t i = 0; i < d_list.size(); ++i) {
    if (d_list[i] < 0 || (i > 0 && d_list[i] <= d_list[i - 1])) {
      throw std::invalid_argument("sweep: d_list must be strictly increasing and non-negative");
    }
  }
}

void append_aggregate(MetricsReport& report, std::optional<int> dilation) {
  MetricsRow mean;
  mean.image_id = "mean";
  mean.dilation = dilation;
  int n = 0;
  for (const auto& row : report.rows) {
    if (row.missing || row.dilation != dilation) continue;
    mean.values.sad.raw += row.values.sad.raw;
    mean.values.sad.kilo += row.values.sad.kilo;
    mean.values.mse += row.values.mse;
    mean.values.gradient += row.values.gradient;
    mean.values.connectivity += row.values.connectivity;
    ++n;
  }
  if (n == 0) {
    mean.missing = true;
    mean.error = "no scored images";
  } else {
    mean.values.sad.raw /= n;
    mean.values.sad.kilo /= n;
    mean.values.mse /= n;
    mean.values.gradient /= n;
    mean.values.connectivity /= n;
  }
  report.aggregates.push_back(mean);
}

std::vector<std::size_t> sweep_subset(const std::vector<CompositeSample>& dataset,
                                      const SweepConfig& cfg) {
  std::vector<std::size_t> out;
  if (!cfg.one_per_foreground) {
    for (std::size_t i = 0; i < dataset.size(); ++i) out.push_back(i);
    return out;
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(dataset[i].provenance.fg_id);
    if (inserted) order.push_back(it->first);
    it->second.push_back(i);
  }
  for (const auto& id : order) {
    const auto& members = groups[id];
    Rng rng(derive_seed(cfg.seed, hash_string(id)));
    out.push_back(members[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<int>(members.size()) - 1))]);
  }
  return out;
}

MetricsReport trimap_sweep(const Predictor& predictor,
                           const std::vector<CompositeSample>& dataset,
                           const SweepConfig& cfg) {
  cfg.validate();
  const auto subset = sweep_subset(dataset, cfg);
  MetricsReport report;
  report.params = cfg.metrics;
  for (int d : cfg.d_list) {
    std::vector<MetricsRow> rows(subset.size());
    parallel_for(subset.size(), [&](std::size_t i) {
      const CompositeSample& s = dataset[subset[i]];
      MetricsRow& row = rows[i];
      row.image_id = s.provenance.fg_id + "__" + s.provenance.bg_id + "__" +
                     std::to_string(subset[i]);
      row.dilation = d;
      const Trimap trimap = make_trimap(s.alpha, d);
      const Mask unknown = unknown_mask(trimap);
      if (!unknown.any()) {
        row.missing = true;
        row.error = "empty unknown region";
        return;
      }
      try {
        const Matte pred = predictor(s.image, trimap);
        row.values = evaluate_all(pred, s.alpha, unknown, cfg.metrics);
      } catch (const std::exception& e) {
        row.missing = true;
        row.error = e.what();
      }
    });
    for (auto& row : rows) {
      if (row.missing) {
        report.flags.push_back("missing " + row.image_id + " at d=" +
                               std::to_string(d) + ": " + row.error);
      }
      report.rows.push_back(std::move(row));
    }
    append_aggregate(report, d);
  }
  return report;
}

Predictor trimap_copy_predictor() {
  return [](const Rgb&, const Trimap& trimap) { return trimap_copy_alpha(trimap); };
}

}  // namespace mattekit
