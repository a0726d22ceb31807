#pragma once

#include "mattekit/adam.hpp"
#include "mattekit/model.hpp"
#include "mattekit/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mattekit::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// On-disk layout, all integers and floats little-endian:
///   magic "MKCKPT\r\n" | u32 version | u64 fingerprint | u32 phase |
///   i64 train_step | f64 lr, beta1, beta2, epsilon | i64 adam_step |
///   u32 count | count x (u32 name_len, name, 4 x u32 dims, u64 offset) |
///   u64 payload_bytes | f32 payload
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t fingerprint = 0;
  Phase phase = Phase::kStage1Only;
  std::int64_t train_step = 0;
  AdamConfig adam{};
  std::int64_t adam_step = 0;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

/// Parameters plus, when given, the optimizer moments of the phase that
/// produced them (stored as "adam.m.<name>" / "adam.v.<name>").
Checkpoint make_checkpoint(ModelParams<float>& model,
                           const TrainResult* training = nullptr);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Rejects bad magic, unknown versions, truncation and, when
/// `expected_fingerprint` is set, a fingerprint mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_fingerprint = {});

/// Copies parameter tensors into `model`; fingerprints must match.
void apply_checkpoint(const Checkpoint& ckpt, ModelParams<float>& model);

/// Names of the tensors updated in `phase`, in optimizer order.
std::vector<std::string> trainable_names(ModelParams<float>& model, Phase phase);

}  // namespace mattekit::io
