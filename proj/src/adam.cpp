#include "mattekit/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mattekit {

template <typename Scalar>
AdamState<Scalar> make_adam_state(std::span<Tensor<Scalar>* const> params,
                                  const AdamConfig& config) {
  AdamState<Scalar> state;
  state.config = config;
  for (const Tensor<Scalar>* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>* const> params,
               AdamState<Scalar>& state) {
  if (params.size() != state.m.size() || params.size() != state.v.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                " parameters but state holds " +
                                std::to_string(state.m.size()));
  }
  const AdamConfig& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, t));
  const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, t));
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar lr = static_cast<Scalar>(cfg.lr);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<Scalar>& p = *params[i];
    if (state.m[i].shape() != p.shape() || state.v[i].shape() != p.shape()) {
      throw std::invalid_argument("adam_step: state shape " +
                                  state.m[i].shape().str() + " vs parameter " +
                                  p.shape().str());
    }
    const auto g = p.grad().array();
    auto m = state.m[i].data().array();
    auto v = state.v[i].data().array();
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.square();
    p.data().array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

template AdamState<float> make_adam_state(std::span<Tensor<float>* const>,
                                          const AdamConfig&);
template AdamState<double> make_adam_state(std::span<Tensor<double>* const>,
                                           const AdamConfig&);
template void adam_step(std::span<Tensor<float>* const>, AdamState<float>&);
template void adam_step(std::span<Tensor<double>* const>, AdamState<double>&);

}  // namespace mattekit
