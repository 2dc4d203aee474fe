#pragma once

#include <memory>
#include <string>
#include <vector>

#include "avasd/core/ops.hpp"
#include "avasd/core/parameter.hpp"

namespace avasd {

/// Non-trainable state saved with the model (batch-norm running statistics).
template <typename T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

/// A stateful wrapper around one kernel. forward() remembers what
/// backward() needs; backward() accumulates parameter gradients and returns
/// the gradient with respect to the forward input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad) = 0;
  virtual void collect_parameters(std::vector<Parameter<T>*>&) {}
  virtual void collect_buffers(std::vector<NamedBuffer<T>>&) {}
};

/// First visual layer: a [N, F, H, W] stack of F frames is convolved with a
/// kernel spanning all F frames, so the time axis collapses to one.
/// Output [N, H', W', C]. No bias; a batch norm always follows.
template <typename T>
class FrameStackConv final : public Layer<T> {
 public:
  FrameStackConv(std::string name, std::size_t frames, std::size_t kernel, std::size_t out_channels,
                 std::size_t stride, std::size_t pad, Prng& prng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override { out.push_back(&kernel_); }

 private:
  Parameter<T> kernel_;  // [F, k, k, 1, C]
  Tensor<T> zero_bias_;
  Stride3 stride_;
  Pad3 pad_;
  Tensor<T> input_;  // [N, F, H, W, 1]
};

/// Channels-last conv on [N, H, W, C]; optional bias.
template <typename T>
class Conv2dLayer final : public Layer<T> {
 public:
  Conv2dLayer(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
              std::size_t stride, std::size_t pad, bool with_bias, Prng& prng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;

 private:
  Parameter<T> kernel_;
  Parameter<T> bias_;  // empty value when disabled
  Tensor<T> zero_bias_;
  Stride2 stride_;
  Pad2 pad_;
  Tensor<T> input_;
};

template <typename T>
class BatchNormLayer final : public Layer<T> {
 public:
  BatchNormLayer(std::string name, std::size_t features);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;
  void collect_buffers(std::vector<NamedBuffer<T>>& out) override;

  BatchNormState<T>& state() { return state_; }

 private:
  std::string name_;
  Parameter<T> gamma_;
  Parameter<T> beta_;
  BatchNormState<T> state_;
  BatchNormCache<T> cache_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Tensor<T> output_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(std::size_t window, std::size_t stride) : window_{window, window}, stride_{stride, stride} {}
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Window2 window_;
  Stride2 stride_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// [N, ...] -> [N, prod(...)]
template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;

 private:
  Shape input_shape_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  enum class Init { kHe, kGlorot };
  DenseLayer(std::string name, std::size_t in, std::size_t out, Init init, bool with_bias, Prng& prng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  Parameter<T> weight_;  // [in, out]
  Parameter<T> bias_;
  Tensor<T> zero_bias_;
  Tensor<T> input_;
};

/// Bidirectional GRU over [B, T, F] -> [B, T, 2H].
template <typename T>
class BiGruLayer final : public Layer<T> {
 public:
  BiGruLayer(std::string name, std::size_t input, std::size_t hidden, Prng& prng);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;

  std::size_t hidden() const { return hidden_; }
  /// 0..2: forward W, U, b; 3..5: backward W, U, b.
  Parameter<T>& parameter(std::size_t i) { return params_[i]; }

 private:
  class Lease;

  std::size_t hidden_;
  Parameter<T> params_[6];
  BiGruCache<T> cache_;
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  void add(std::unique_ptr<Layer<T>> layer) { layers_.push_back(std::move(layer)); }
  bool empty() const { return layers_.empty(); }
  std::size_t size() const { return layers_.size(); }
  Layer<T>& at(std::size_t i) { return *layers_.at(i); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;
  void collect_buffers(std::vector<NamedBuffer<T>>& out) override;

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Weight initializers. Both draw from a uniform distribution:
//   He:     limit sqrt(6 / fan_in)            (layers followed by ReLU)
//   Glorot: limit sqrt(6 / (fan_in + fan_out)) (GRU kernels and heads)
template <typename T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, Prng& prng);
template <typename T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Prng& prng);

}  // namespace avasd
