#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mattekit {

template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Single-channel real image; alpha mattes live here with values in [0, 1].
using Matte = PlaneT<float>;

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Three-plane color image, values in [0, 1].
template <typename Scalar>
struct RgbT {
  std::array<PlaneT<Scalar>, 3> ch;

  RgbT() = default;
  RgbT(Eigen::Index rows, Eigen::Index cols) {
    for (auto& c : ch) c = PlaneT<Scalar>::Zero(rows, cols);
  }

  static RgbT constant(Eigen::Index rows, Eigen::Index cols, Scalar r,
                       Scalar g, Scalar b) {
    RgbT out;
    out.ch[0] = PlaneT<Scalar>::Constant(rows, cols, r);
    out.ch[1] = PlaneT<Scalar>::Constant(rows, cols, g);
    out.ch[2] = PlaneT<Scalar>::Constant(rows, cols, b);
    return out;
  }

  Eigen::Index rows() const { return ch[0].rows(); }
  Eigen::Index cols() const { return ch[0].cols(); }

  template <typename Other>
  RgbT<Other> cast() const {
    RgbT<Other> out;
    for (int c = 0; c < 3; ++c) out.ch[c] = ch[c].template cast<Other>();
    return out;
  }
};

using Rgb = RgbT<float>;

/// Per-pixel three-way label stored with its on-disk code.
using Trimap =
    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace trimap_code {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kUnknown = 128;
inline constexpr std::uint8_t kForeground = 255;
}  // namespace trimap_code

inline Mask unknown_mask(const Trimap& trimap) {
  return trimap == trimap_code::kUnknown;
}

/// Network encoding of a trimap: BG 0, UNKNOWN 0.5, FG 1.
template <typename Scalar>
PlaneT<Scalar> encode_trimap(const Trimap& trimap) {
  return trimap.unaryExpr([](std::uint8_t v) {
    if (v == trimap_code::kForeground) return Scalar(1);
    if (v == trimap_code::kUnknown) return Scalar(0.5);
    return Scalar(0);
  });
}

/// Alpha guess implied by the trimap alone: FG 1, BG 0, UNKNOWN 0.5.
inline Matte trimap_copy_alpha(const Trimap& trimap) {
  return encode_trimap<float>(trimap);
}

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(
        std::string(what) + ": dimension mismatch " + std::to_string(a.rows()) +
        "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
        "x" + std::to_string(b.cols()));
  }
}

/// Corner-aligned bilinear resampling: output pixel (i, j) samples the source
/// at (i * (H-1)/(h-1), j * (W-1)/(w-1)); a unit output extent samples 0.
template <typename Derived>
PlaneT<typename Derived::Scalar> resize_bilinear(
    const Eigen::ArrayBase<Derived>& src, Eigen::Index out_h,
    Eigen::Index out_w) {
  using Scalar = typename Derived::Scalar;
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("resize_bilinear: output extent must be >= 1");
  }
  const Eigen::Index in_h = src.rows();
  const Eigen::Index in_w = src.cols();
  PlaneT<Scalar> out(out_h, out_w);
  const double sy = out_h > 1 ? double(in_h - 1) / double(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? double(in_w - 1) / double(out_w - 1) : 0.0;
  for (Eigen::Index i = 0; i < out_h; ++i) {
    const double fy = i * sy;
    Eigen::Index y0 = static_cast<Eigen::Index>(fy);
    if (y0 > in_h - 1) y0 = in_h - 1;
    const Eigen::Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - double(y0);
    for (Eigen::Index j = 0; j < out_w; ++j) {
      const double fx = j * sx;
      Eigen::Index x0 = static_cast<Eigen::Index>(fx);
      if (x0 > in_w - 1) x0 = in_w - 1;
      const Eigen::Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - double(x0);
      const double top = (1 - wx) * double(src(y0, x0)) + wx * double(src(y0, x1));
      const double bot = (1 - wx) * double(src(y1, x0)) + wx * double(src(y1, x1));
      out(i, j) = static_cast<Scalar>((1 - wy) * top + wy * bot);
    }
  }
  return out;
}

template <typename Derived>
PlaneT<typename Derived::Scalar> flip_horizontal(
    const Eigen::ArrayBase<Derived>& src) {
  return src.rowwise().reverse();
}

/// Summed-area table with a zero first row and column: entry (y, x) holds the
/// sum of src over [0, y) x [0, x).
template <typename Derived>
Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
integral_image(const Eigen::ArrayBase<Derived>& src) {
  const Eigen::Index h = src.rows();
  const Eigen::Index w = src.cols();
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sat =
      Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
          h + 1, w + 1);
  for (Eigen::Index y = 0; y < h; ++y) {
    double row = 0;
    for (Eigen::Index x = 0; x < w; ++x) {
      row += double(src(y, x));
      sat(y + 1, x + 1) = sat(y, x + 1) + row;
    }
  }
  return sat;
}

}  // namespace mattekit
