#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <string>

namespace mattekit {

/// Rank-4 extent in (batch, channel, height, width) order.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense NCHW array with an optional same-shape gradient buffer.
///
/// Storage is a contiguous Eigen vector so whole-tensor arithmetic can be
/// written as Eigen expressions on `data()` / `grad()`.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Scalar fill);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return shape_.numel(); }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  Scalar& operator()(int n, int c, int y, int x) {
    return data_[offset(n, c, y, x)];
  }
  Scalar operator()(int n, int c, int y, int x) const {
    return data_[offset(n, c, y, x)];
  }

  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }

  Scalar* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const Scalar* plane(int n, int c) const {
    return data_.data() + offset(n, c, 0, 0);
  }

  bool has_grad() const { return grad_.has_value(); }
  /// Allocates (zeroed) on first use.
  Vector& grad();
  const Vector& grad() const;
  void zero_grad();
  void drop_grad() { grad_.reset(); }

  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    out.data() = data_.template cast<Other>();
    return out;
  }

 private:
  Shape shape_{};
  Vector data_;
  std::optional<Vector> grad_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace mattekit
