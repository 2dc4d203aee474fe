#include "avasd/model/layers.hpp"

#include <cmath>

#include "avasd/core/error.hpp"

namespace avasd {

template <typename T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, Prng& prng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& v : w.data()) v = static_cast<T>(prng.uniform(-limit, limit));
}

template <typename T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Prng& prng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (T& v : w.data()) v = static_cast<T>(prng.uniform(-limit, limit));
}

// ---- FrameStackConv -------------------------------------------------------

template <typename T>
FrameStackConv<T>::FrameStackConv(std::string name, std::size_t frames, std::size_t kernel,
                                  std::size_t out_channels, std::size_t stride, std::size_t pad,
                                  Prng& prng)
    : kernel_(name + ".kernel", Tensor<T>({frames, kernel, kernel, 1, out_channels})),
      zero_bias_({out_channels}),
      stride_{1, stride, stride},
      pad_{0, pad, pad} {
  he_uniform(kernel_.value, frames * kernel * kernel, prng);
}

template <typename T>
Tensor<T> FrameStackConv<T>::forward(const Tensor<T>& x, Mode mode) {
  if (x.rank() != 4 || x.dim(1) != kernel_.value.dim(0)) {
    throw ShapeError("frame-stack conv expects [N," + std::to_string(kernel_.value.dim(0)) +
                     ",H,W], got " + shape_to_string(x.shape()));
  }
  Tensor<T> in = x.reshaped({x.dim(0), x.dim(1), x.dim(2), x.dim(3), 1});
  Tensor<T> y = conv3d(in, kernel_.value, zero_bias_, stride_, pad_);
  if (mode == Mode::kTrain) input_ = std::move(in);
  return std::move(y).reshaped({y.dim(0), y.dim(2), y.dim(3), y.dim(4)});
}

template <typename T>
Tensor<T> FrameStackConv<T>::backward(const Tensor<T>& grad) {
  if (input_.empty()) throw ArgumentError("frame-stack conv backward without a training forward");
  const Tensor<T> g = grad.reshaped({grad.dim(0), 1, grad.dim(1), grad.dim(2), grad.dim(3)});
  ConvGrads<T> grads = conv3d_backward(input_, kernel_.value, g, stride_, pad_);
  kernel_.accumulate(grads.kernel);
  const Shape& s = input_.shape();
  return std::move(grads.input).reshaped({s[0], s[1], s[2], s[3]});
}

// ---- Conv2dLayer ----------------------------------------------------------

template <typename T>
Conv2dLayer<T>::Conv2dLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
                            std::size_t kernel, std::size_t stride, std::size_t pad, bool with_bias,
                            Prng& prng)
    : kernel_(name + ".kernel", Tensor<T>({kernel, kernel, in_channels, out_channels})),
      zero_bias_({out_channels}),
      stride_{stride, stride},
      pad_{pad, pad} {
  he_uniform(kernel_.value, kernel * kernel * in_channels, prng);
  if (with_bias) bias_ = Parameter<T>(name + ".bias", Tensor<T>({out_channels}));
}

template <typename T>
Tensor<T> Conv2dLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  if (x.rank() != 4) throw ShapeError("conv2d layer expects [N,H,W,C], got " + shape_to_string(x.shape()));
  Tensor<T> y = conv2d(x, kernel_.value, bias_.value.empty() ? zero_bias_ : bias_.value, stride_, pad_);
  if (mode == Mode::kTrain) input_ = x;
  return y;
}

template <typename T>
Tensor<T> Conv2dLayer<T>::backward(const Tensor<T>& grad) {
  if (input_.empty()) throw ArgumentError("conv2d backward without a training forward");
  ConvGrads<T> grads = conv2d_backward(input_, kernel_.value, grad, stride_, pad_);
  kernel_.accumulate(grads.kernel);
  if (!bias_.value.empty()) bias_.accumulate(grads.bias);
  return std::move(grads.input);
}

template <typename T>
void Conv2dLayer<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  out.push_back(&kernel_);
  if (!bias_.value.empty()) out.push_back(&bias_);
}

// ---- BatchNormLayer -------------------------------------------------------

template <typename T>
BatchNormLayer<T>::BatchNormLayer(std::string name, std::size_t features)
    : name_(std::move(name)),
      gamma_(name_ + ".gamma", Tensor<T>({features}, T{1})),
      beta_(name_ + ".beta", Tensor<T>({features}, T{0})),
      state_(BatchNormState<T>::identity(features)) {}

template <typename T>
Tensor<T> BatchNormLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  return batchnorm(x, gamma_.value, beta_.value, state_, mode, mode == Mode::kTrain ? &cache_ : nullptr);
}

template <typename T>
Tensor<T> BatchNormLayer<T>::backward(const Tensor<T>& grad) {
  BatchNormGrads<T> g = batchnorm_backward(cache_, gamma_.value, grad);
  gamma_.accumulate(g.gamma);
  beta_.accumulate(g.beta);
  return std::move(g.input);
}

template <typename T>
void BatchNormLayer<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

template <typename T>
void BatchNormLayer<T>::collect_buffers(std::vector<NamedBuffer<T>>& out) {
  out.push_back({name_ + ".running_mean", &state_.running_mean});
  out.push_back({name_ + ".running_var", &state_.running_var});
}

// ---- ReLU / pooling / flatten ---------------------------------------------

template <typename T>
Tensor<T> ReluLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> y = relu(x);
  if (mode == Mode::kTrain) output_ = y;
  return y;
}

template <typename T>
Tensor<T> ReluLayer<T>::backward(const Tensor<T>& grad) {
  return relu_backward(output_, grad);
}

template <typename T>
Tensor<T> MaxPoolLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  PoolResult<T> r = maxpool2d(x, window_, stride_);
  if (mode == Mode::kTrain) {
    input_shape_ = x.shape();
    argmax_ = std::move(r.argmax);
  }
  return std::move(r.output);
}

template <typename T>
Tensor<T> MaxPoolLayer<T>::backward(const Tensor<T>& grad) {
  return maxpool2d_backward(input_shape_, argmax_, grad);
}

template <typename T>
Tensor<T> FlattenLayer<T>::forward(const Tensor<T>& x, Mode) {
  input_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

template <typename T>
Tensor<T> FlattenLayer<T>::backward(const Tensor<T>& grad) {
  return grad.reshaped(input_shape_);
}

// ---- DenseLayer -----------------------------------------------------------

template <typename T>
DenseLayer<T>::DenseLayer(std::string name, std::size_t in, std::size_t out, Init init,
                          bool with_bias, Prng& prng)
    : weight_(name + ".weight", Tensor<T>({in, out})), zero_bias_({out}) {
  if (init == Init::kHe) he_uniform(weight_.value, in, prng);
  else glorot_uniform(weight_.value, in, out, prng);
  if (with_bias) bias_ = Parameter<T>(name + ".bias", Tensor<T>({out}));
}

template <typename T>
Tensor<T> DenseLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> y = dense(x, weight_.value, bias_.value.empty() ? zero_bias_ : bias_.value);
  if (mode == Mode::kTrain) input_ = x;
  return y;
}

template <typename T>
Tensor<T> DenseLayer<T>::backward(const Tensor<T>& grad) {
  if (input_.empty()) throw ArgumentError("dense backward without a training forward");
  DenseGrads<T> g = dense_backward(input_, weight_.value, grad);
  weight_.accumulate(g.weight);
  if (!bias_.value.empty()) bias_.accumulate(g.bias);
  return std::move(g.input);
}

template <typename T>
void DenseLayer<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_);
  if (!bias_.value.empty()) out.push_back(&bias_);
}

// ---- BiGruLayer -----------------------------------------------------------

// Moves the parameter values into GruWeights for the duration of a kernel
// call and back afterwards, so the kernels see one contiguous struct without
// a copy of the weights.
template <typename T>
class BiGruLayer<T>::Lease {
 public:
  explicit Lease(Parameter<T>* p)
      : p_(p),
        fwd{std::move(p[0].value), std::move(p[1].value), std::move(p[2].value)},
        bwd{std::move(p[3].value), std::move(p[4].value), std::move(p[5].value)} {}
  ~Lease() {
    p_[0].value = std::move(fwd.input_kernel);
    p_[1].value = std::move(fwd.recurrent_kernel);
    p_[2].value = std::move(fwd.bias);
    p_[3].value = std::move(bwd.input_kernel);
    p_[4].value = std::move(bwd.recurrent_kernel);
    p_[5].value = std::move(bwd.bias);
  }
  Lease(const Lease&) = delete;
  Lease& operator=(const Lease&) = delete;

 private:
  Parameter<T>* p_;

 public:
  GruWeights<T> fwd;
  GruWeights<T> bwd;
};

template <typename T>
BiGruLayer<T>::BiGruLayer(std::string name, std::size_t input, std::size_t hidden, Prng& prng)
    : hidden_(hidden) {
  const char* dir[2] = {".fwd", ".bwd"};
  for (int d = 0; d < 2; ++d) {
    const std::string base = name + dir[d];
    params_[3 * d + 0] = Parameter<T>(base + ".input_kernel", Tensor<T>({input, 3 * hidden}));
    params_[3 * d + 1] = Parameter<T>(base + ".recurrent_kernel", Tensor<T>({hidden, 3 * hidden}));
    params_[3 * d + 2] = Parameter<T>(base + ".bias", Tensor<T>({3 * hidden}));
    glorot_uniform(params_[3 * d + 0].value, input, 3 * hidden, prng);
    glorot_uniform(params_[3 * d + 1].value, hidden, 3 * hidden, prng);
  }
}

template <typename T>
Tensor<T> BiGruLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  Lease w(params_);
  return bigru(x, w.fwd, w.bwd, mode == Mode::kTrain ? &cache_ : nullptr);
}

template <typename T>
Tensor<T> BiGruLayer<T>::backward(const Tensor<T>& grad) {
  BiGruGrads<T> g;
  {
    Lease w(params_);
    g = bigru_backward(cache_, w.fwd, w.bwd, grad);
  }
  params_[0].accumulate(g.forward.input_kernel);
  params_[1].accumulate(g.forward.recurrent_kernel);
  params_[2].accumulate(g.forward.bias);
  params_[3].accumulate(g.backward.input_kernel);
  params_[4].accumulate(g.backward.recurrent_kernel);
  params_[5].accumulate(g.backward.bias);
  return std::move(g.input);
}

template <typename T>
void BiGruLayer<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  for (auto& p : params_) out.push_back(&p);
}

// ---- Sequential -----------------------------------------------------------

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, Mode mode) {
  if (layers_.empty()) return x;
  Tensor<T> h = layers_.front()->forward(x, mode);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->forward(h, mode);
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad) {
  if (layers_.empty()) return grad;
  Tensor<T> g = layers_.back()->backward(grad);
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

template <typename T>
void Sequential<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

template <typename T>
void Sequential<T>::collect_buffers(std::vector<NamedBuffer<T>>& out) {
  for (auto& l : layers_) l->collect_buffers(out);
}

#define AVASD_INSTANTIATE(T)                                                        \
  template void he_uniform(Tensor<T>&, std::size_t, Prng&);                         \
  template void glorot_uniform(Tensor<T>&, std::size_t, std::size_t, Prng&);        \
  template class FrameStackConv<T>;                                                 \
  template class Conv2dLayer<T>;                                                    \
  template class BatchNormLayer<T>;                                                 \
  template class ReluLayer<T>;                                                      \
  template class MaxPoolLayer<T>;                                                   \
  template class FlattenLayer<T>;                                                   \
  template class DenseLayer<T>;                                                     \
  template class BiGruLayer<T>;                                                     \
  template class Sequential<T>;

AVASD_INSTANTIATE(float)
AVASD_INSTANTIATE(double)
#undef AVASD_INSTANTIATE

}  // namespace avasd
