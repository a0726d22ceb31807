#include "mattekit/training.hpp"

#include "mattekit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace mattekit {

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::kStage1Only:
      return "stage1";
    case Phase::kStage2Only:
      return "stage2";
    case Phase::kFineTuneAll:
      return "finetune";
  }
  return "unknown";
}

void TrainPlan::validate() const {
  for (int s : steps) {
    if (s < 0) throw std::invalid_argument("train: step budgets must be >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(adam.lr > 0)) throw std::invalid_argument("train: lr must be > 0");
  if (convergence_window < 0) {
    throw std::invalid_argument("train: convergence_window must be >= 0");
  }
}

LossRecord sample_loss_and_gradients(const ModelParams<float>& model,
                                     const CompositeSample& sample, Phase phase,
                                     const LossConfig& loss,
                                     Gradients<float>& grads) {
  const Mask unknown = unknown_mask(sample.trimap);
  LossRecord rec;
  rec.phase = phase;
  StageTrace<float> trace1;
  const Matte raw = stage1_forward(sample.image, sample.trimap, model,
                                   phase == Phase::kStage2Only ? nullptr : &trace1);
  if (phase == Phase::kStage1Only) {
    const auto l = overall_loss(raw, sample.alpha, sample.fg, sample.bg,
                                sample.image, unknown, loss);
    stage1_backward(model, trace1, l.grad, grads);
    rec.alpha = l.alpha;
    rec.compositional = l.compositional;
    rec.overall = l.overall;
    return rec;
  }

  StageTrace<float> trace2;
  const Matte refined = stage2_forward(sample.image, raw, model, &trace2);
  if (phase == Phase::kStage2Only) {
    auto la = alpha_prediction_loss(refined, sample.alpha, unknown, loss);
    const auto lc = compositional_loss(refined, sample.fg, sample.bg,
                                       sample.image, unknown, loss);
    stage2_backward(model, trace2, la.grad, grads);
    rec.alpha = la.value;
    rec.compositional = lc.value;
    rec.overall = la.value;
    return rec;
  }

  const auto l = overall_loss(refined, sample.alpha, sample.fg, sample.bg,
                              sample.image, unknown, loss);
  const Matte grad_raw = stage2_backward(model, trace2, l.grad, grads);
  stage1_backward(model, trace1, grad_raw, grads);
  rec.alpha = l.alpha;
  rec.compositional = l.compositional;
  rec.overall = l.overall;
  return rec;
}

namespace {

// Cycles through deterministic epochs, regenerating augmentation per epoch.
class BatchSource {
 public:
  BatchSource(const std::vector<CompositeSample>& dataset,
              const DatasetConfig& cfg)
      : dataset_(dataset), cfg_(cfg) {}

  std::vector<std::optional<CompositeSample>> next(int batch,
                                                   const AugmentOptions& opts,
                                                   std::size_t& skipped) {
    std::vector<std::pair<int, std::size_t>> picks;
    for (int b = 0; b < batch; ++b) {
      if (cursor_ == dataset_.size()) {
        cursor_ = 0;
        ++epoch_;
      }
      picks.emplace_back(epoch_, cursor_++);
    }
    std::vector<std::optional<CompositeSample>> out(picks.size());
    std::vector<char> failed(picks.size(), 0);
    parallel_for(picks.size(), [&](std::size_t i) {
      const EpochStream stream(dataset_, picks[i].first, cfg_, opts);
      try {
        out[i] = stream.at(picks[i].second);
        if (!unknown_mask(out[i]->trimap).any()) out[i].reset();
      } catch (const std::invalid_argument&) {
        out[i].reset();
      }
      failed[i] = !out[i];
    });
    skipped += static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
    return out;
  }

 private:
  const std::vector<CompositeSample>& dataset_;
  DatasetConfig cfg_;
  int epoch_ = 0;
  std::size_t cursor_ = 0;
};

bool converged(const std::vector<double>& losses, int window, double tol) {
  if (window <= 0 || losses.size() < 2 * static_cast<std::size_t>(window)) {
    return false;
  }
  const auto end = losses.end();
  const double cur = std::accumulate(end - window, end, 0.0) / window;
  const double prev = std::accumulate(end - 2 * window, end - window, 0.0) / window;
  if (prev <= 0) return true;
  return (prev - cur) / prev < tol;
}

}  // namespace

TrainResult train(ModelParams<float>& model,
                  const std::vector<CompositeSample>& dataset,
                  const DatasetConfig& data_cfg, const TrainPlan& plan,
                  const LossConfig& loss, const StepCallback& on_step) {
  plan.validate();
  loss.validate();
  data_cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  DatasetConfig cfg = data_cfg;
  cfg.seed = derive_seed(plan.seed, 0x747261696eull);
  BatchSource source(dataset, cfg);
  TrainResult result;

  const Phase phases[] = {Phase::kStage1Only, Phase::kStage2Only,
                          Phase::kFineTuneAll};
  for (Phase phase : phases) {
    const int budget = plan.steps[static_cast<int>(phase)];
    if (budget == 0) continue;
    model.stage1_trainable = phase != Phase::kStage2Only;
    model.stage2_trainable = phase != Phase::kStage1Only;

    std::vector<Tensor<float>*> trainable;
    if (model.stage1_trainable) {
      for (auto* t : model.stage1_tensors()) trainable.push_back(t);
    }
    if (model.stage2_trainable) {
      for (auto* t : model.stage2_tensors()) trainable.push_back(t);
    }
    // Fresh moments per phase: each phase optimizes a different set.
    AdamState<float> state = make_adam_state<float>(trainable, plan.adam);

    AugmentOptions opts = plan.augment;
    if (phase == Phase::kStage2Only) opts.random_dilation = false;

    std::vector<double> phase_losses;
    for (int step = 0; step < budget; ++step) {
      auto batch = source.next(plan.batch_size, opts, result.skipped_samples);
      std::vector<std::optional<LossRecord>> records(batch.size());
      std::vector<Gradients<float>> grads(batch.size());
      parallel_for(batch.size(), [&](std::size_t i) {
        if (!batch[i]) return;
        grads[i] = make_gradients(model);
        records[i] = sample_loss_and_gradients(model, *batch[i], phase, loss, grads[i]);
      });

      LossRecord rec;
      rec.step = result.steps;
      rec.phase = phase;
      int used = 0;
      Gradients<float> total = make_gradients(model);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!records[i]) continue;
        total += grads[i];
        rec.alpha += records[i]->alpha;
        rec.compositional += records[i]->compositional;
        rec.overall += records[i]->overall;
        ++used;
      }
      if (used == 0) continue;
      rec.alpha /= used;
      rec.compositional /= used;
      rec.overall /= used;
      if (!std::isfinite(rec.overall)) {
        throw std::runtime_error("train: non-finite loss at step " +
                                 std::to_string(rec.step) + " (" +
                                 phase_name(phase) + ")");
      }
      total *= 1.0f / static_cast<float>(used);

      auto all = model.all_tensors();
      for (std::size_t i = 0; i < all.size(); ++i) {
        all[i]->grad() = total.tensors[i].data();
      }
      adam_step<float>(trainable, state);
      for (auto* t : all) t->drop_grad();

      result.history.push_back(rec);
      ++result.steps;
      if (on_step) on_step(rec);
      phase_losses.push_back(rec.overall);
      if (converged(phase_losses, plan.convergence_window, plan.convergence_tol)) {
        break;
      }
    }
    result.optimizer = std::move(state);
    result.last_phase = phase;
  }
  model.stage1_trainable = true;
  model.stage2_trainable = true;
  return result;
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << "step,phase,L_alpha,L_c,L_overall\n";
  os << std::setprecision(9);
  for (const auto& r : history) {
    os << r.step << ',' << phase_name(r.phase) << ',' << r.alpha << ','
       << r.compositional << ',' << r.overall << '\n';
  }
  return os.str();
}

}  // namespace mattekit
