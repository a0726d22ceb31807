#include "mattekit/model.hpp"

#include "mattekit/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mattekit {

namespace {

int scale_width(int width, double multiplier) {
  return std::max(1, static_cast<int>(std::lround(width * multiplier)));
}

enum class StepKind { kConv, kRelu, kPool, kUnpool };

struct Step {
  StepKind kind;
  int index;  // layer index for convs, pool slot for (un)pools
};

std::vector<Step> stage1_program(const Stage1Config& cfg) {
  std::vector<Step> steps;
  const int enc = static_cast<int>(cfg.encoder_widths.size());
  int slot = 0;
  for (int i = 0; i < enc; ++i) {
    steps.push_back({StepKind::kConv, i});
    steps.push_back({StepKind::kRelu, i});
    if (slot < cfg.pool_count() && cfg.pool_after[slot] == i) {
      steps.push_back({StepKind::kPool, slot++});
    }
  }
  const int dec = static_cast<int>(cfg.decoder_widths.size());
  for (int k = 0; k < dec; ++k) {
    steps.push_back({StepKind::kConv, enc + k});
    steps.push_back({StepKind::kRelu, enc + k});
    if (k < cfg.pool_count()) {
      steps.push_back({StepKind::kUnpool, cfg.pool_count() - 1 - k});
    }
  }
  steps.push_back({StepKind::kConv, enc + dec});
  return steps;
}

std::vector<Step> stage2_program(int first_layer) {
  std::vector<Step> steps;
  for (int i = 0; i < 4; ++i) {
    steps.push_back({StepKind::kConv, first_layer + i});
    if (i < 3) steps.push_back({StepKind::kRelu, first_layer + i});
  }
  return steps;
}

template <typename Scalar>
Tensor<Scalar> run_program(const std::vector<Step>& steps,
                           const ModelParams<Scalar>& params, Tensor<Scalar> x,
                           StageTrace<Scalar>* trace, int pool_slots) {
  std::vector<PoolIndices> pools(static_cast<std::size_t>(pool_slots));
  if (trace) trace->inputs.clear();
  for (const Step& step : steps) {
    if (trace) trace->inputs.push_back(x);
    switch (step.kind) {
      case StepKind::kConv:
        x = conv2d(x, params.layers[step.index].conv);
        break;
      case StepKind::kRelu:
        x = relu(x);
        break;
      case StepKind::kPool: {
        auto pooled = maxpool2x2(x);
        pools[step.index] = std::move(pooled.indices);
        x = std::move(pooled.output);
        break;
      }
      case StepKind::kUnpool:
        x = unpool2x2(x, pools[step.index]);
        break;
    }
  }
  if (trace) trace->pools = std::move(pools);
  return x;
}

// Returns the gradient w.r.t. the program input.
template <typename Scalar>
Tensor<Scalar> backprop_program(const std::vector<Step>& steps,
                                const ModelParams<Scalar>& params,
                                const StageTrace<Scalar>& trace,
                                Tensor<Scalar> grad, Gradients<Scalar>& grads,
                                bool need_input_grad) {
  for (std::size_t s = steps.size(); s-- > 0;) {
    const Step& step = steps[s];
    const Tensor<Scalar>& input = trace.inputs[s];
    switch (step.kind) {
      case StepKind::kConv: {
        const auto li = static_cast<std::size_t>(step.index);
        const bool want_input = s > 0 || need_input_grad;
        Tensor<Scalar> grad_in(want_input ? input.shape() : Shape{});
        conv2d_backward(input, params.layers[li].conv, grad,
                        want_input ? &grad_in : nullptr, &grads.tensors[2 * li],
                        &grads.tensors[2 * li + 1]);
        grad = std::move(grad_in);
        break;
      }
      case StepKind::kRelu:
        grad = relu_backward(input, grad);
        break;
      case StepKind::kPool:
        grad = maxpool2x2_backward(grad, trace.pools[step.index]);
        break;
      case StepKind::kUnpool:
        grad = unpool2x2_backward(grad, trace.pools[step.index]);
        break;
    }
  }
  return grad;
}

template <typename Scalar>
Tensor<Scalar> plane_tensor(const PlaneT<Scalar>& p) {
  Tensor<Scalar> t({1, 1, static_cast<int>(p.rows()), static_cast<int>(p.cols())});
  Eigen::Map<PlaneT<Scalar>>(t.plane(0, 0), p.rows(), p.cols()) = p;
  return t;
}

template <typename Scalar>
PlaneT<Scalar> tensor_plane(const Tensor<Scalar>& t, int rows, int cols) {
  Eigen::Map<const PlaneT<Scalar>, 0, Eigen::OuterStride<>> view(
      t.plane(0, 0), rows, cols, Eigen::OuterStride<>(t.shape().w));
  return view;
}

template <typename Scalar>
Layer<Scalar> make_layer(std::string name, int in_c, int out_c, int kernel,
                         bool relu, std::uint64_t seed) {
  Layer<Scalar> layer;
  layer.name = std::move(name);
  layer.conv.weights = xavier_init<Scalar>({out_c, in_c, kernel, kernel},
                                           derive_seed(seed, hash_string(layer.name)));
  layer.conv.bias = Tensor<Scalar>({1, out_c, 1, 1});
  layer.conv.padding = kernel / 2;
  layer.relu = relu;
  return layer;
}

void check_dims(Eigen::Index ar, Eigen::Index ac, Eigen::Index br,
                Eigen::Index bc, const char* what) {
  if (ar != br || ac != bc) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch " +
                                std::to_string(ar) + "x" + std::to_string(ac) +
                                " vs " + std::to_string(br) + "x" +
                                std::to_string(bc));
  }
}

}  // namespace

int Stage1Config::scaled(int width) const {
  return scale_width(width, width_multiplier);
}

void Stage1Config::validate() const {
  if (!(width_multiplier > 0)) {
    throw std::invalid_argument("stage1: width_multiplier must be positive");
  }
  if (encoder_widths.empty() || decoder_widths.empty()) {
    throw std::invalid_argument("stage1: encoder and decoder need layers");
  }
  for (int k : {encoder_kernel, bottleneck_kernel, decoder_kernel, prediction_kernel}) {
    if (k < 1 || k % 2 == 0) {
      throw std::invalid_argument("stage1: kernel sizes must be odd and positive");
    }
  }
  const int enc = static_cast<int>(encoder_widths.size());
  for (int i = 0; i < pool_count(); ++i) {
    if (pool_after[i] < 0 || pool_after[i] >= enc ||
        (i > 0 && pool_after[i] <= pool_after[i - 1])) {
      throw std::invalid_argument("stage1: pool positions must be increasing encoder indices");
    }
  }
  if (static_cast<int>(decoder_widths.size()) != pool_count() + 1) {
    throw std::invalid_argument(
        "stage1: decoder needs one conv per unpool plus one after the last (" +
        std::to_string(pool_count() + 1) + "), got " +
        std::to_string(decoder_widths.size()));
  }
  for (int k = 0; k < pool_count(); ++k) {
    const int pooled = encoder_widths[pool_after[pool_count() - 1 - k]];
    if (decoder_widths[k] != pooled) {
      throw std::invalid_argument(
          "stage1: decoder conv " + std::to_string(k) + " emits " +
          std::to_string(decoder_widths[k]) + " channels but unpool " +
          std::to_string(pool_count() - 1 - k) + " expects " +
          std::to_string(pooled));
    }
  }
  for (int w : encoder_widths) {
    if (w < 1) throw std::invalid_argument("stage1: widths must be positive");
  }
  for (int w : decoder_widths) {
    if (w < 1) throw std::invalid_argument("stage1: widths must be positive");
  }
}

int Stage2Config::scaled(int width) const {
  return scale_width(width, width_multiplier);
}

void Stage2Config::validate() const {
  if (widths.size() != 4) {
    throw std::invalid_argument("stage2: exactly 4 conv layers required, got " +
                                std::to_string(widths.size()));
  }
  if (widths.back() != 1) {
    throw std::invalid_argument("stage2: last layer must emit 1 channel");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("stage2: kernel must be odd and positive");
  }
  if (!(width_multiplier > 0)) {
    throw std::invalid_argument("stage2: width_multiplier must be positive");
  }
}

template <typename Scalar>
int ModelParams<Scalar>::stage1_layer_count() const {
  return static_cast<int>(stage1.encoder_widths.size() +
                          stage1.decoder_widths.size() + 1);
}

template <typename Scalar>
std::vector<NamedTensor<Scalar>> ModelParams<Scalar>::named_tensors() {
  std::vector<NamedTensor<Scalar>> out;
  for (auto& layer : layers) {
    out.push_back({layer.name + ".weight", &layer.conv.weights});
    out.push_back({layer.name + ".bias", &layer.conv.bias});
  }
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> ModelParams<Scalar>::stage1_tensors() {
  std::vector<Tensor<Scalar>*> out;
  for (int i = 0; i < stage1_layer_count(); ++i) {
    out.push_back(&layers[i].conv.weights);
    out.push_back(&layers[i].conv.bias);
  }
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> ModelParams<Scalar>::stage2_tensors() {
  std::vector<Tensor<Scalar>*> out;
  for (std::size_t i = stage1_layer_count(); i < layers.size(); ++i) {
    out.push_back(&layers[i].conv.weights);
    out.push_back(&layers[i].conv.bias);
  }
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> ModelParams<Scalar>::all_tensors() {
  std::vector<Tensor<Scalar>*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.conv.weights);
    out.push_back(&layer.conv.bias);
  }
  return out;
}

template <typename Scalar>
std::size_t ModelParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += layer.conv.weights.size() + layer.conv.bias.size();
  }
  return n;
}

template <typename Scalar>
std::uint64_t ModelParams<Scalar>::fingerprint() const {
  std::string desc;
  for (const auto& layer : layers) {
    desc += layer.name + layer.conv.weights.shape().str() +
            (layer.relu ? "r" : "l") + std::to_string(layer.conv.padding) + ";";
  }
  for (int p : stage1.pool_after) desc += "p" + std::to_string(p);
  return hash_string(desc);
}

template <typename Scalar>
bool ModelParams<Scalar>::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.conv.weights.all_finite() || !layer.conv.bias.all_finite()) {
      return false;
    }
  }
  return true;
}

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::cast() const {
  ModelParams<Other> out;
  out.stage1 = stage1;
  out.stage2 = stage2;
  out.stage1_trainable = stage1_trainable;
  out.stage2_trainable = stage2_trainable;
  for (const auto& layer : layers) {
    Layer<Other> l;
    l.name = layer.name;
    l.relu = layer.relu;
    l.conv.weights = layer.conv.weights.template cast<Other>();
    l.conv.bias = layer.conv.bias.template cast<Other>();
    l.conv.stride = layer.conv.stride;
    l.conv.padding = layer.conv.padding;
    out.layers.push_back(std::move(l));
  }
  return out;
}

template <typename Scalar>
void Gradients<Scalar>::set_zero() {
  for (auto& t : tensors) t.data().setZero();
}

template <typename Scalar>
Gradients<Scalar>& Gradients<Scalar>::operator+=(const Gradients& other) {
  if (other.tensors.size() != tensors.size()) {
    throw std::invalid_argument("Gradients: layout mismatch");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    tensors[i].data() += other.tensors[i].data();
  }
  return *this;
}

template <typename Scalar>
Gradients<Scalar>& Gradients<Scalar>::operator*=(Scalar s) {
  for (auto& t : tensors) t.data() *= s;
  return *this;
}

template <typename Scalar>
Gradients<Scalar> make_gradients(ModelParams<Scalar>& params) {
  Gradients<Scalar> g;
  for (Tensor<Scalar>* t : params.all_tensors()) g.tensors.emplace_back(t->shape());
  return g;
}

template <typename Scalar>
ModelParams<Scalar> build_model(const Stage1Config& cfg1,
                                const Stage2Config& cfg2, std::uint64_t seed) {
  cfg1.validate();
  cfg2.validate();
  ModelParams<Scalar> params;
  params.stage1 = cfg1;
  params.stage2 = cfg2;

  int in_c = 3;
  const int enc = static_cast<int>(cfg1.encoder_widths.size());
  int block = 1;
  int within = 1;
  for (int i = 0; i < enc; ++i) {
    const bool bottleneck = i == enc - 1;
    const std::string name = bottleneck ? std::string("encoder.fc6_conv")
                                        : "encoder.conv" + std::to_string(block) +
                                              "_" + std::to_string(within);
    const int out_c = cfg1.scaled(cfg1.encoder_widths[i]);
    auto layer = make_layer<Scalar>(
        name, in_c, out_c,
        bottleneck ? cfg1.bottleneck_kernel : cfg1.encoder_kernel, true, seed);
    if (i == 0) {
      // Built for RGB, then widened so the trimap channel starts with no
      // influence.
      layer.conv = zero_extend_first_layer(layer.conv);
    }
    params.layers.push_back(std::move(layer));
    in_c = out_c;
    ++within;
    for (int p : cfg1.pool_after) {
      if (p == i) {
        ++block;
        within = 1;
      }
    }
  }
  const int dec = static_cast<int>(cfg1.decoder_widths.size());
  for (int k = 0; k < dec; ++k) {
    const int out_c = cfg1.scaled(cfg1.decoder_widths[k]);
    params.layers.push_back(make_layer<Scalar>(
        "decoder.conv" + std::to_string(dec - k), in_c, out_c,
        cfg1.decoder_kernel, true, seed));
    in_c = out_c;
  }
  params.layers.push_back(make_layer<Scalar>(
      "decoder.alpha_pred", in_c, 1, cfg1.prediction_kernel, false, seed));

  in_c = 4;
  for (int i = 0; i < 4; ++i) {
    const int out_c = i == 3 ? 1 : cfg2.scaled(cfg2.widths[i]);
    auto layer = make_layer<Scalar>("refine.conv" + std::to_string(i + 1), in_c,
                                    out_c, cfg2.kernel, i < 3, seed);
    if (i == 3) {
      // The skip connection alone carries the stage-1 matte at start.
      layer.conv.weights.data().setZero();
    }
    params.layers.push_back(std::move(layer));
    in_c = out_c;
  }
  return params;
}

template <typename Scalar>
Tensor<Scalar> stage1_input(const RgbT<Scalar>& image, const Trimap& trimap) {
  check_dims(image.rows(), image.cols(), trimap.rows(), trimap.cols(),
             "stage1_forward(image, trimap)");
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  Tensor<Scalar> x({1, 4, h, w});
  for (int c = 0; c < 3; ++c) {
    Eigen::Map<PlaneT<Scalar>>(x.plane(0, c), h, w) = image.ch[c];
  }
  Eigen::Map<PlaneT<Scalar>>(x.plane(0, 3), h, w) = encode_trimap<Scalar>(trimap);
  return x;
}

template <typename Scalar>
PlaneT<Scalar> stage1_forward(const RgbT<Scalar>& image, const Trimap& trimap,
                              const ModelParams<Scalar>& params,
                              StageTrace<Scalar>* trace) {
  const Tensor<Scalar> x = stage1_input(image, trimap);
  const int multiple = 1 << params.stage1.pool_count();
  Tensor<Scalar> raw = run_program(stage1_program(params.stage1), params,
                                   pad_to_multiple(x, multiple), trace,
                                   params.stage1.pool_count());
  const int h = x.shape().h;
  const int w = x.shape().w;
  PlaneT<Scalar> alpha = tensor_plane(raw, h, w).max(Scalar(0)).min(Scalar(1));
  if (trace) {
    trace->raw_output = std::move(raw);
    trace->rows = h;
    trace->cols = w;
  }
  return alpha;
}

template <typename Scalar>
void stage1_backward(const ModelParams<Scalar>& params,
                     const StageTrace<Scalar>& trace,
                     const PlaneT<Scalar>& grad_alpha, Gradients<Scalar>& grads) {
  check_dims(grad_alpha.rows(), grad_alpha.cols(), trace.rows, trace.cols,
             "stage1_backward");
  const Shape& padded = trace.raw_output.shape();
  Tensor<Scalar> grad(padded);
  for (int y = 0; y < trace.rows; ++y) {
    for (int x = 0; x < trace.cols; ++x) {
      const Scalar raw = trace.raw_output(0, 0, y, x);
      // Straight through inside [0, 1], blocked where the clamp is active.
      grad(0, 0, y, x) =
          (raw >= Scalar(0) && raw <= Scalar(1)) ? grad_alpha(y, x) : Scalar(0);
    }
  }
  backprop_program(stage1_program(params.stage1), params, trace, std::move(grad),
                   grads, false);
}

template <typename Scalar>
PlaneT<Scalar> stage2_forward(const RgbT<Scalar>& image,
                              const PlaneT<Scalar>& alpha_raw,
                              const ModelParams<Scalar>& params,
                              StageTrace<Scalar>* trace) {
  check_dims(image.rows(), image.cols(), alpha_raw.rows(), alpha_raw.cols(),
             "stage2_forward(image, alpha)");
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  Tensor<Scalar> x({1, 4, h, w});
  for (int c = 0; c < 3; ++c) {
    Eigen::Map<PlaneT<Scalar>>(x.plane(0, c), h, w) = image.ch[c];
  }
  Eigen::Map<PlaneT<Scalar>>(x.plane(0, 3), h, w) = alpha_raw * Scalar(255);
  Tensor<Scalar> residual =
      run_program(stage2_program(params.stage1_layer_count()), params,
                  std::move(x), trace, 0);
  Tensor<Scalar> raw = residual;
  Eigen::Map<PlaneT<Scalar>>(raw.plane(0, 0), h, w) += alpha_raw;
  PlaneT<Scalar> out = Eigen::Map<const PlaneT<Scalar>>(raw.plane(0, 0), h, w)
                           .max(Scalar(0))
                           .min(Scalar(1));
  if (trace) {
    trace->raw_output = std::move(raw);
    trace->rows = h;
    trace->cols = w;
  }
  return out;
}

template <typename Scalar>
PlaneT<Scalar> stage2_backward(const ModelParams<Scalar>& params,
                               const StageTrace<Scalar>& trace,
                               const PlaneT<Scalar>& grad_refined,
                               Gradients<Scalar>& grads) {
  check_dims(grad_refined.rows(), grad_refined.cols(), trace.rows, trace.cols,
             "stage2_backward");
  const int h = trace.rows;
  const int w = trace.cols;
  Eigen::Map<const PlaneT<Scalar>> raw(trace.raw_output.plane(0, 0), h, w);
  const PlaneT<Scalar> gated =
      (raw >= Scalar(0) && raw <= Scalar(1)).select(grad_refined, Scalar(0));
  Tensor<Scalar> grad = plane_tensor(gated);
  const Tensor<Scalar> grad_input =
      backprop_program(stage2_program(params.stage1_layer_count()), params,
                       trace, std::move(grad), grads, true);
  return gated + Scalar(255) * Eigen::Map<const PlaneT<Scalar>>(
                                   grad_input.plane(0, 3), h, w);
}

template <typename Scalar>
PlaneT<Scalar> full_forward(const RgbT<Scalar>& image, const Trimap& trimap,
                            const ModelParams<Scalar>& params) {
  return stage2_forward(image, stage1_forward(image, trimap, params), params);
}

#define MATTEKIT_INSTANTIATE_MODEL(T)                                         \
  template struct ModelParams<T>;                                             \
  template struct Gradients<T>;                                               \
  template Gradients<T> make_gradients(ModelParams<T>&);                      \
  template ModelParams<T> build_model(const Stage1Config&, const Stage2Config&, \
                                      std::uint64_t);                         \
  template Tensor<T> stage1_input(const RgbT<T>&, const Trimap&);             \
  template PlaneT<T> stage1_forward(const RgbT<T>&, const Trimap&,            \
                                    const ModelParams<T>&, StageTrace<T>*);   \
  template void stage1_backward(const ModelParams<T>&, const StageTrace<T>&,  \
                                const PlaneT<T>&, Gradients<T>&);             \
  template PlaneT<T> stage2_forward(const RgbT<T>&, const PlaneT<T>&,         \
                                    const ModelParams<T>&, StageTrace<T>*);   \
  template PlaneT<T> stage2_backward(const ModelParams<T>&,                   \
                                     const StageTrace<T>&, const PlaneT<T>&,  \
                                     Gradients<T>&);                          \
  template PlaneT<T> full_forward(const RgbT<T>&, const Trimap&,              \
                                  const ModelParams<T>&);

MATTEKIT_INSTANTIATE_MODEL(float)
MATTEKIT_INSTANTIATE_MODEL(double)

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;

#undef MATTEKIT_INSTANTIATE_MODEL

}  // namespace mattekit
