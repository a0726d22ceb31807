#pragma once

#include "mattekit/tensor.hpp"

#include <cstdint>
#include <vector>

namespace mattekit {

template <typename Scalar>
struct ConvParams {
  Tensor<Scalar> weights;  // (out_ch, in_ch, kh, kw)
  Tensor<Scalar> bias;     // (1, out_ch, 1, 1)
  int stride = 1;
  int padding = 0;

  int out_channels() const { return weights.shape().n; }
  int in_channels() const { return weights.shape().c; }
  int kernel_h() const { return weights.shape().h; }
  int kernel_w() const { return weights.shape().w; }
};

/// Argmax positions of a 2x2 max-pool. Each entry is the flat (y * w + x)
/// offset into the pre-pool plane it was taken from.
struct PoolIndices {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::int32_t> argmax;
};

template <typename Scalar>
struct PoolResult {
  Tensor<Scalar> output;
  PoolIndices indices;
};

/// Output extent of a convolution along one axis.
int conv_output_extent(int in, int kernel, int stride, int padding);

/// Zero-padded cross-correlation.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input,
                      const ConvParams<Scalar>& params);

/// Accumulates (+=) into whichever gradient targets are non-null. Each target
/// must already have the shape of the quantity it differentiates.
template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& input,
                     const ConvParams<Scalar>& params,
                     const Tensor<Scalar>& grad_output,
                     Tensor<Scalar>* grad_input, Tensor<Scalar>* grad_weights,
                     Tensor<Scalar>* grad_bias);

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& input,
                             const Tensor<Scalar>& grad_output);

/// Ties go to the first maximum in row-major window order.
template <typename Scalar>
PoolResult<Scalar> maxpool2x2(const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> maxpool2x2_backward(const Tensor<Scalar>& grad_output,
                                   const PoolIndices& indices);

template <typename Scalar>
Tensor<Scalar> unpool2x2(const Tensor<Scalar>& input,
                         const PoolIndices& indices);

template <typename Scalar>
Tensor<Scalar> unpool2x2_backward(const Tensor<Scalar>& grad_output,
                                  const PoolIndices& indices);

/// Corner-aligned bilinear resampling of every (n, c) plane.
template <typename Scalar>
Tensor<Scalar> bilinear_resize(const Tensor<Scalar>& input, int out_h,
                               int out_w);

/// Glorot-uniform weights for a (out_ch, in_ch, kh, kw) kernel.
template <typename Scalar>
Tensor<Scalar> xavier_init(Shape shape, std::uint64_t seed);

/// Bound `a` of the Glorot-uniform draw for a conv kernel shape.
double xavier_bound(Shape shape);

/// Widens a 3-input-channel kernel to 4 channels with an all-zero 4th slice.
template <typename Scalar>
ConvParams<Scalar> zero_extend_first_layer(const ConvParams<Scalar>& weights3);

/// Stacks tensors along the channel axis.
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

/// Edge-replicating pad on the bottom/right so h and w become multiples of
/// `multiple`.
template <typename Scalar>
Tensor<Scalar> pad_to_multiple(const Tensor<Scalar>& input, int multiple);

/// Top-left window of the given spatial size.
template <typename Scalar>
Tensor<Scalar> crop_top_left(const Tensor<Scalar>& input, int h, int w);

}  // namespace mattekit
