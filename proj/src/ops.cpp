#include "mattekit/ops.hpp"

#include "mattekit/image.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mattekit {

namespace {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ConstRowMap = Eigen::Map<const RowMatrix<Scalar>>;

template <typename Scalar>
using RowMap = Eigen::Map<RowMatrix<Scalar>>;

struct ConvGeometry {
  int in_c, in_h, in_w;
  int kh, kw, stride, pad;
  int out_h, out_w;

  int patch() const { return in_c * kh * kw; }
  int pixels() const { return out_h * out_w; }
};

template <typename Scalar>
ConvGeometry geometry(const Tensor<Scalar>& input,
                      const ConvParams<Scalar>& params) {
  const Shape& in = input.shape();
  const Shape& ws = params.weights.shape();
  if (in.c != ws.c) {
    throw std::invalid_argument("conv2d: input " + in.str() +
                                " has channel count incompatible with weights " +
                                ws.str());
  }
  if (ws.h % 2 == 0 || ws.w % 2 == 0) {
    throw std::invalid_argument("conv2d: kernel extents must be odd, got " +
                                ws.str());
  }
  if (params.bias.size() != static_cast<std::size_t>(ws.n)) {
    throw std::invalid_argument("conv2d: bias " + params.bias.shape().str() +
                                " does not match weights " + ws.str());
  }
  if (params.stride < 1 || params.padding < 0) {
    throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
  }
  ConvGeometry g{in.c, in.h, in.w, ws.h, ws.w, params.stride, params.padding, 0, 0};
  g.out_h = conv_output_extent(in.h, ws.h, params.stride, params.padding);
  g.out_w = conv_output_extent(in.w, ws.w, params.stride, params.padding);
  if (g.out_h < 1 || g.out_w < 1) {
    throw std::invalid_argument("conv2d: input " + in.str() +
                                " too small for weights " + ws.str());
  }
  return g;
}

// Unfolds one sample into a (in_c*kh*kw) x (out_h*out_w) patch matrix.
template <typename Scalar>
void im2col(const Scalar* src, const ConvGeometry& g, RowMatrix<Scalar>& col) {
  col.resize(g.patch(), g.pixels());
  for (int c = 0; c < g.in_c; ++c) {
    const Scalar* plane = src + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        Scalar* row = col.data() +
                      static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) *
                          g.pixels();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          Scalar* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, Scalar(0));
            continue;
          }
          const Scalar* line = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? line[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& col, const ConvGeometry& g,
                Scalar* dst) {
  for (int c = 0; c < g.in_c; ++c) {
    Scalar* plane = dst + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const Scalar* row = col.data() +
                            static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) *
                                g.pixels();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          Scalar* line = plane + static_cast<std::size_t>(iy) * g.in_w;
          const Scalar* src = row + static_cast<std::size_t>(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_pool_shape(const Shape& s) {
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw std::invalid_argument("maxpool2x2: spatial dims must be even, got " +
                                s.str());
  }
}

}  // namespace

int conv_output_extent(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input,
                      const ConvParams<Scalar>& params) {
  const ConvGeometry g = geometry(input, params);
  const int out_c = params.out_channels();
  const int n = input.shape().n;
  Tensor<Scalar> output({n, out_c, g.out_h, g.out_w});
  ConstRowMap<Scalar> weights(params.weights.data().data(), out_c, g.patch());
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> bias(
      params.bias.data().data(), out_c);
  RowMatrix<Scalar> col;
  for (int b = 0; b < n; ++b) {
    im2col(input.plane(b, 0), g, col);
    RowMap<Scalar> out(output.plane(b, 0), out_c, g.pixels());
    out.noalias() = weights * col;
    out.colwise() += bias;
  }
  return output;
}

template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& input,
                     const ConvParams<Scalar>& params,
                     const Tensor<Scalar>& grad_output,
                     Tensor<Scalar>* grad_input, Tensor<Scalar>* grad_weights,
                     Tensor<Scalar>* grad_bias) {
  const ConvGeometry g = geometry(input, params);
  const int out_c = params.out_channels();
  const int n = input.shape().n;
  const Shape expected{n, out_c, g.out_h, g.out_w};
  if (grad_output.shape() != expected) {
    throw std::invalid_argument("conv2d_backward: grad_output " +
                                grad_output.shape().str() + " expected " +
                                expected.str());
  }
  if (grad_input && grad_input->shape() != input.shape()) {
    throw std::invalid_argument("conv2d_backward: grad_input " +
                                grad_input->shape().str() + " expected " +
                                input.shape().str());
  }
  if (grad_weights && grad_weights->shape() != params.weights.shape()) {
    throw std::invalid_argument("conv2d_backward: grad_weights " +
                                grad_weights->shape().str() + " expected " +
                                params.weights.shape().str());
  }
  if (grad_bias && grad_bias->size() != static_cast<std::size_t>(out_c)) {
    throw std::invalid_argument("conv2d_backward: grad_bias " +
                                grad_bias->shape().str() + " mismatches weights");
  }

  ConstRowMap<Scalar> weights(params.weights.data().data(), out_c, g.patch());
  RowMatrix<Scalar> col;
  RowMatrix<Scalar> grad_col;
  for (int b = 0; b < n; ++b) {
    ConstRowMap<Scalar> dout(grad_output.plane(b, 0), out_c, g.pixels());
    if (grad_weights) {
      im2col(input.plane(b, 0), g, col);
      RowMap<Scalar> dw(grad_weights->data().data(), out_c, g.patch());
      dw.noalias() += dout * col.transpose();
    }
    if (grad_bias) {
      grad_bias->data() += dout.rowwise().sum();
    }
    if (grad_input) {
      grad_col.noalias() = weights.transpose() * dout;
      col2im_add(grad_col, g, grad_input->plane(b, 0));
    }
  }
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input) {
  Tensor<Scalar> out(input.shape());
  out.data() = input.data().cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& input,
                             const Tensor<Scalar>& grad_output) {
  if (input.shape() != grad_output.shape()) {
    throw std::invalid_argument("relu_backward: input " + input.shape().str() +
                                " vs grad " + grad_output.shape().str());
  }
  Tensor<Scalar> out(input.shape());
  out.data() = (input.data().array() > Scalar(0))
                   .select(grad_output.data(), Scalar(0));
  return out;
}

template <typename Scalar>
PoolResult<Scalar> maxpool2x2(const Tensor<Scalar>& input) {
  const Shape& s = input.shape();
  check_pool_shape(s);
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  PoolResult<Scalar> result{Tensor<Scalar>(os), PoolIndices{s, os, {}}};
  result.indices.argmax.resize(os.numel());
  std::size_t k = 0;
  for (int b = 0; b < s.n; ++b) {
    for (int c = 0; c < s.c; ++c) {
      const Scalar* src = input.plane(b, c);
      Scalar* dst = result.output.plane(b, c);
      for (int oy = 0; oy < os.h; ++oy) {
        for (int ox = 0; ox < os.w; ++ox, ++k) {
          int best = (2 * oy) * s.w + 2 * ox;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = (2 * oy + dy) * s.w + 2 * ox + dx;
              if (src[idx] > src[best]) best = idx;
            }
          }
          dst[oy * os.w + ox] = src[best];
          result.indices.argmax[k] = best;
        }
      }
    }
  }
  return result;
}

namespace {

void check_indices(const PoolIndices& idx, const Shape& pooled,
                   const char* what) {
  if (pooled != idx.output_shape) {
    throw std::invalid_argument(std::string(what) + ": tensor " + pooled.str() +
                                " does not match pool indices " +
                                idx.output_shape.str());
  }
  if (idx.argmax.size() != pooled.numel() ||
      idx.input_shape.h != 2 * pooled.h || idx.input_shape.w != 2 * pooled.w) {
    throw std::invalid_argument(std::string(what) + ": malformed pool indices");
  }
  const int w = idx.input_shape.w;
  std::size_t k = 0;
  for (int p = 0; p < pooled.n * pooled.c; ++p) {
    for (int oy = 0; oy < pooled.h; ++oy) {
      for (int ox = 0; ox < pooled.w; ++ox, ++k) {
        const int a = idx.argmax[k];
        const int y = a / w;
        const int x = a % w;
        if (a < 0 || y / 2 != oy || x / 2 != ox) {
          throw std::invalid_argument(std::string(what) + ": index " +
                                      std::to_string(a) + " outside window (" +
                                      std::to_string(oy) + ", " +
                                      std::to_string(ox) + ")");
        }
      }
    }
  }
}

// Scatter pooled values to their argmax cells.
template <typename Scalar>
Tensor<Scalar> scatter(const Tensor<Scalar>& pooled, const PoolIndices& idx) {
  Tensor<Scalar> out(idx.input_shape);
  const std::size_t plane_out = static_cast<std::size_t>(pooled.shape().h) *
                                pooled.shape().w;
  const std::size_t plane_in =
      static_cast<std::size_t>(idx.input_shape.h) * idx.input_shape.w;
  for (std::size_t k = 0; k < idx.argmax.size(); ++k) {
    const std::size_t p = k / plane_out;
    out.data()[p * plane_in + idx.argmax[k]] += pooled.data()[k];
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> gather(const Tensor<Scalar>& full, const PoolIndices& idx) {
  Tensor<Scalar> out(idx.output_shape);
  const std::size_t plane_out =
      static_cast<std::size_t>(idx.output_shape.h) * idx.output_shape.w;
  const std::size_t plane_in =
      static_cast<std::size_t>(idx.input_shape.h) * idx.input_shape.w;
  for (std::size_t k = 0; k < idx.argmax.size(); ++k) {
    const std::size_t p = k / plane_out;
    out.data()[k] = full.data()[p * plane_in + idx.argmax[k]];
  }
  return out;
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> maxpool2x2_backward(const Tensor<Scalar>& grad_output,
                                   const PoolIndices& indices) {
  check_indices(indices, grad_output.shape(), "maxpool2x2_backward");
  return scatter(grad_output, indices);
}

template <typename Scalar>
Tensor<Scalar> unpool2x2(const Tensor<Scalar>& input,
                         const PoolIndices& indices) {
  check_indices(indices, input.shape(), "unpool2x2");
  return scatter(input, indices);
}

template <typename Scalar>
Tensor<Scalar> unpool2x2_backward(const Tensor<Scalar>& grad_output,
                                  const PoolIndices& indices) {
  if (grad_output.shape() != indices.input_shape) {
    throw std::invalid_argument("unpool2x2_backward: grad " +
                                grad_output.shape().str() + " expected " +
                                indices.input_shape.str());
  }
  check_indices(indices, indices.output_shape, "unpool2x2_backward");
  return gather(grad_output, indices);
}

template <typename Scalar>
Tensor<Scalar> bilinear_resize(const Tensor<Scalar>& input, int out_h,
                               int out_w) {
  const Shape& s = input.shape();
  Tensor<Scalar> out({s.n, s.c, out_h, out_w});
  for (int b = 0; b < s.n; ++b) {
    for (int c = 0; c < s.c; ++c) {
      Eigen::Map<const PlaneT<Scalar>> src(input.plane(b, c), s.h, s.w);
      Eigen::Map<PlaneT<Scalar>>(out.plane(b, c), out_h, out_w) =
          resize_bilinear(src, out_h, out_w);
    }
  }
  return out;
}

double xavier_bound(Shape shape) {
  const double receptive = double(shape.h) * shape.w;
  const double fan_in = shape.c * receptive;
  const double fan_out = shape.n * receptive;
  return std::sqrt(6.0 / (fan_in + fan_out));
}

template <typename Scalar>
Tensor<Scalar> xavier_init(Shape shape, std::uint64_t seed) {
  Tensor<Scalar> out(shape);
  const double a = xavier_bound(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-a, a);
  for (Eigen::Index i = 0; i < out.data().size(); ++i) {
    out.data()[i] = static_cast<Scalar>(dist(rng));
  }
  return out;
}

template <typename Scalar>
ConvParams<Scalar> zero_extend_first_layer(const ConvParams<Scalar>& weights3) {
  const Shape& s = weights3.weights.shape();
  if (s.c != 3) {
    throw std::invalid_argument(
        "zero_extend_first_layer: expected 3 input channels, got " + s.str());
  }
  ConvParams<Scalar> out{Tensor<Scalar>({s.n, 4, s.h, s.w}), weights3.bias,
                         weights3.stride, weights3.padding};
  for (int o = 0; o < s.n; ++o) {
    for (int c = 0; c < 3; ++c) {
      std::copy_n(weights3.weights.plane(o, c), s.h * s.w,
                  out.weights.plane(o, c));
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a,
                               const Tensor<Scalar>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument("concat_channels: " + sa.str() + " vs " +
                                sb.str());
  }
  Tensor<Scalar> out({sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = static_cast<std::size_t>(sa.h) * sa.w;
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0), plane * sa.c, out.plane(n, 0));
    std::copy_n(b.plane(n, 0), plane * sb.c, out.plane(n, sa.c));
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> pad_to_multiple(const Tensor<Scalar>& input, int multiple) {
  const Shape& s = input.shape();
  const int h = (s.h + multiple - 1) / multiple * multiple;
  const int w = (s.w + multiple - 1) / multiple * multiple;
  if (h == s.h && w == s.w) return input;
  Tensor<Scalar> out({s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const Scalar* src = input.plane(n, c);
      Scalar* dst = out.plane(n, c);
      for (int y = 0; y < h; ++y) {
        const int sy = std::min(y, s.h - 1);
        for (int x = 0; x < w; ++x) {
          dst[y * w + x] = src[sy * s.w + std::min(x, s.w - 1)];
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> crop_top_left(const Tensor<Scalar>& input, int h, int w) {
  const Shape& s = input.shape();
  if (h > s.h || w > s.w) {
    throw std::invalid_argument("crop_top_left: crop larger than " + s.str());
  }
  Tensor<Scalar> out({s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < h; ++y) {
        std::copy_n(input.plane(n, c) + static_cast<std::size_t>(y) * s.w, w,
                    out.plane(n, c) + static_cast<std::size_t>(y) * w);
      }
    }
  }
  return out;
}

#define MATTEKIT_INSTANTIATE_OPS(T)                                          \
  template Tensor<T> conv2d(const Tensor<T>&, const ConvParams<T>&);         \
  template void conv2d_backward(const Tensor<T>&, const ConvParams<T>&,      \
                                const Tensor<T>&, Tensor<T>*, Tensor<T>*,    \
                                Tensor<T>*);                                 \
  template Tensor<T> relu(const Tensor<T>&);                                 \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);      \
  template PoolResult<T> maxpool2x2(const Tensor<T>&);                       \
  template Tensor<T> maxpool2x2_backward(const Tensor<T>&,                   \
                                         const PoolIndices&);                \
  template Tensor<T> unpool2x2(const Tensor<T>&, const PoolIndices&);        \
  template Tensor<T> unpool2x2_backward(const Tensor<T>&,                    \
                                        const PoolIndices&);                 \
  template Tensor<T> bilinear_resize(const Tensor<T>&, int, int);            \
  template Tensor<T> xavier_init(Shape, std::uint64_t);                      \
  template ConvParams<T> zero_extend_first_layer(const ConvParams<T>&);      \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> pad_to_multiple(const Tensor<T>&, int);                 \
  template Tensor<T> crop_top_left(const Tensor<T>&, int, int);

MATTEKIT_INSTANTIATE_OPS(float)
MATTEKIT_INSTANTIATE_OPS(double)

#undef MATTEKIT_INSTANTIATE_OPS

}  // namespace mattekit
