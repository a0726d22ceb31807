#pragma once

#include "mattekit/adam.hpp"
#include "mattekit/dataset.hpp"
#include "mattekit/losses.hpp"
#include "mattekit/model.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mattekit {

enum class Phase { kStage1Only = 0, kStage2Only = 1, kFineTuneAll = 2 };

std::string phase_name(Phase phase);

/// Three phases run in order: stage 1 alone, stage 2 with stage 1 frozen,
/// then everything. A phase ends at its step budget or when the mean loss of
/// the latest window improves on the previous window by less than
/// `convergence_tol` (relative). A zero budget skips the phase.
struct TrainPlan {
  std::array<int, 3> steps{1000, 1000, 1000};
  int batch_size = 4;
  AdamConfig adam{};
  std::uint64_t seed = 0;
  int convergence_window = 100;
  double convergence_tol = 1e-4;
  AugmentOptions augment{};

  void validate() const;
  friend bool operator==(const TrainPlan&, const TrainPlan&) = default;
};

struct LossRecord {
  std::int64_t step = 0;
  Phase phase = Phase::kStage1Only;
  double alpha = 0;
  double compositional = 0;
  double overall = 0;
};

struct TrainResult {
  std::vector<LossRecord> history;
  /// Optimizer state of the last phase that ran.
  AdamState<float> optimizer;
  Phase last_phase = Phase::kStage1Only;
  std::int64_t steps = 0;
  std::size_t skipped_samples = 0;
};

using StepCallback = std::function<void(const LossRecord&)>;

/// Loss and gradients of one sample for the given phase. Gradients are
/// accumulated into `grads`.
LossRecord sample_loss_and_gradients(const ModelParams<float>& model,
                                     const CompositeSample& sample, Phase phase,
                                     const LossConfig& loss,
                                     Gradients<float>& grads);

TrainResult train(ModelParams<float>& model,
                  const std::vector<CompositeSample>& dataset,
                  const DatasetConfig& data_cfg, const TrainPlan& plan,
                  const LossConfig& loss, const StepCallback& on_step = {});

/// Loss history as CSV: step,phase,L_alpha,L_c,L_overall.
std::string loss_history_csv(const std::vector<LossRecord>& history);

}  // namespace mattekit
