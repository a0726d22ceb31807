#pragma once

#include "mattekit/image.hpp"
#include "mattekit/ops.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mattekit {

/// Encoder-decoder alpha predictor layout.
///
/// The encoder follows the VGG-16 pattern: 13 3x3 convs with a 2x2 max-pool
/// after the convs listed in `pool_after`, then a 7x7 conv standing in for the
/// fully connected fc6 layer. The decoder mirrors the pools with unpools: its
/// k-th conv runs before the k-th unpool, so it must emit as many channels as
/// the encoder conv that fed the matching pool.
struct Stage1Config {
  std::vector<int> encoder_widths{64,  64,  128, 128, 256, 256, 256,
                                  512, 512, 512, 512, 512, 512, 4096};
  std::vector<int> pool_after{1, 3, 6, 9, 12};
  int encoder_kernel = 3;
  int bottleneck_kernel = 7;
  std::vector<int> decoder_widths{512, 512, 256, 128, 64, 64};
  int decoder_kernel = 5;
  int prediction_kernel = 5;
  double width_multiplier = 1.0;

  int pool_count() const { return static_cast<int>(pool_after.size()); }
  int scaled(int width) const;
  void validate() const;
  friend bool operator==(const Stage1Config&, const Stage1Config&) = default;
};

/// Refinement network: 4 same-size convs, ReLU after the first three.
struct Stage2Config {
  std::vector<int> widths{64, 64, 64, 1};
  int kernel = 3;
  double width_multiplier = 1.0;

  int scaled(int width) const;
  void validate() const;
  friend bool operator==(const Stage2Config&, const Stage2Config&) = default;
};

template <typename Scalar>
struct Layer {
  std::string name;
  ConvParams<Scalar> conv;
  bool relu = true;
};

template <typename Scalar>
struct NamedTensor {
  std::string name;
  Tensor<Scalar>* tensor;
};

/// Both stages' parameters, kept in a fixed order: encoder, decoder,
/// prediction layer, refinement.
template <typename Scalar>
struct ModelParams {
  Stage1Config stage1;
  Stage2Config stage2;
  std::vector<Layer<Scalar>> layers;
  bool stage1_trainable = true;
  bool stage2_trainable = true;

  int stage1_layer_count() const;
  std::vector<NamedTensor<Scalar>> named_tensors();
  std::vector<Tensor<Scalar>*> stage1_tensors();
  std::vector<Tensor<Scalar>*> stage2_tensors();
  std::vector<Tensor<Scalar>*> all_tensors();
  std::size_t parameter_count() const;
  /// Hash of the layer names and tensor shapes.
  std::uint64_t fingerprint() const;
  bool all_finite() const;

  template <typename Other>
  ModelParams<Other> cast() const;
};

/// Gradient buffers laid out like ModelParams::all_tensors().
template <typename Scalar>
struct Gradients {
  std::vector<Tensor<Scalar>> tensors;

  void set_zero();
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(Scalar s);
};

template <typename Scalar>
Gradients<Scalar> make_gradients(ModelParams<Scalar>& params);

/// Activations recorded by a forward pass for the matching backward pass.
template <typename Scalar>
struct StageTrace {
  std::vector<Tensor<Scalar>> inputs;  // input of each step
  std::vector<PoolIndices> pools;
  Tensor<Scalar> raw_output;           // pre-clamp, padded
  int rows = 0;
  int cols = 0;
};

template <typename Scalar>
ModelParams<Scalar> build_model(const Stage1Config& cfg1,
                                const Stage2Config& cfg2, std::uint64_t seed);

/// 4-channel input tensor: RGB plus the trimap encoded as {0, 0.5, 1}.
template <typename Scalar>
Tensor<Scalar> stage1_input(const RgbT<Scalar>& image, const Trimap& trimap);

template <typename Scalar>
PlaneT<Scalar> stage1_forward(const RgbT<Scalar>& image, const Trimap& trimap,
                              const ModelParams<Scalar>& params,
                              StageTrace<Scalar>* trace = nullptr);

/// Accumulates parameter gradients of stage 1 given dL/d(alpha_raw).
template <typename Scalar>
void stage1_backward(const ModelParams<Scalar>& params,
                     const StageTrace<Scalar>& trace,
                     const PlaneT<Scalar>& grad_alpha, Gradients<Scalar>& grads);

template <typename Scalar>
PlaneT<Scalar> stage2_forward(const RgbT<Scalar>& image,
                              const PlaneT<Scalar>& alpha_raw,
                              const ModelParams<Scalar>& params,
                              StageTrace<Scalar>* trace = nullptr);

/// Accumulates stage-2 parameter gradients; returns dL/d(alpha_raw).
template <typename Scalar>
PlaneT<Scalar> stage2_backward(const ModelParams<Scalar>& params,
                               const StageTrace<Scalar>& trace,
                               const PlaneT<Scalar>& grad_refined,
                               Gradients<Scalar>& grads);

template <typename Scalar>
PlaneT<Scalar> full_forward(const RgbT<Scalar>& image, const Trimap& trimap,
                            const ModelParams<Scalar>& params);

}  // namespace mattekit
