#include "mattekit/tensor.hpp"

#include <stdexcept>

namespace mattekit {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
         std::to_string(h) + ", " + std::to_string(w) + ")";
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape) : Tensor(shape, Scalar(0)) {}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Scalar fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw std::invalid_argument("negative tensor extent " + shape.str());
  }
  data_ = Vector::Constant(static_cast<Eigen::Index>(shape.numel()), fill);
}

template <typename Scalar>
typename Tensor<Scalar>::Vector& Tensor<Scalar>::grad() {
  if (!grad_) grad_ = Vector::Zero(data_.size());
  return *grad_;
}

template <typename Scalar>
const typename Tensor<Scalar>::Vector& Tensor<Scalar>::grad() const {
  if (!grad_) throw std::logic_error("tensor has no gradient buffer");
  return *grad_;
}

template <typename Scalar>
void Tensor<Scalar>::zero_grad() {
  grad().setZero();
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace mattekit
