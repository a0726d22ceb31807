#pragma once

#include "mattekit/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mattekit {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Bias-corrected Adam moments for an ordered parameter list.
template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor<Scalar>> m;
  std::vector<Tensor<Scalar>> v;
};

template <typename Scalar>
AdamState<Scalar> make_adam_state(std::span<Tensor<Scalar>* const> params,
                                  const AdamConfig& config);

/// One update of every parameter from its gradient buffer; increments step.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>* const> params, AdamState<Scalar>& state);

extern template AdamState<float> make_adam_state(std::span<Tensor<float>* const>,
                                                 const AdamConfig&);
extern template AdamState<double> make_adam_state(
    std::span<Tensor<double>* const>, const AdamConfig&);
extern template void adam_step(std::span<Tensor<float>* const>,
                               AdamState<float>&);
extern template void adam_step(std::span<Tensor<double>* const>,
                               AdamState<double>&);

}  // namespace mattekit
