#pragma once

// Forward and backward kernels for every layer the detector uses. Each
// forward function is pure; the information a backward pass needs is either
// recomputed from the inputs (convolution, dense) or returned in a cache
// struct (pooling argmax, batch-norm statistics, GRU gates, dropout mask).
//
// Layouts are channels-last and row-major:
//   conv3d  input [N,T,H,W,C] (or unbatched [T,H,W,C]), kernel [kt,kh,kw,Cin,Cout]
//   conv2d  input [N,H,W,C]   (or unbatched [H,W,C]),   kernel [kh,kw,Cin,Cout]
//   dense   input [N,F], weight [F,G]
//   bigru   input [B,T,F]     (or unbatched [T,F])

#include <cstddef>
#include <span>
#include <vector>

#include "avasd/core/prng.hpp"
#include "avasd/core/tensor.hpp"

namespace avasd {

enum class Mode { kTrain, kInfer };

struct Stride2 {
  std::size_t h = 1, w = 1;
};
struct Pad2 {
  std::size_t h = 0, w = 0;
};
struct Window2 {
  std::size_t h = 1, w = 1;
};
struct Stride3 {
  std::size_t t = 1, h = 1, w = 1;
};
struct Pad3 {
  std::size_t t = 0, h = 0, w = 0;
};

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernel;
  Tensor<T> bias;
};

// ---- convolution ----------------------------------------------------------

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Stride3 stride = {}, Pad3 pad = {});

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                             const Tensor<T>& grad_output, Stride3 stride = {}, Pad3 pad = {});

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Stride2 stride = {}, Pad2 pad = {});

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                             const Tensor<T>& grad_output, Stride2 stride = {}, Pad2 pad = {});

// ---- pooling --------------------------------------------------------------

template <typename T>
struct PoolResult {
  Tensor<T> output;
  // Flat input index of the selected maximum, one per output element.
  std::vector<std::size_t> argmax;
};

/// Valid-mode max pooling over H and W of [N,H,W,C] or [H,W,C]. Ties go to
/// the lowest flat input index.
template <typename T>
PoolResult<T> maxpool2d(const Tensor<T>& input, Window2 window, Stride2 stride);

template <typename T>
Tensor<T> maxpool2d_backward(const Shape& input_shape, std::span<const std::size_t> argmax,
                             const Tensor<T>& grad_output);

// ---- batch normalization --------------------------------------------------

struct BatchNormOptions {
  double decay = 0.9;  // running = decay * running + (1 - decay) * batch
  double epsilon = 1e-5;
};

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;

  static BatchNormState identity(std::size_t features) {
    return {Tensor<T>({features}, T{0}), Tensor<T>({features}, T{1})};
  }
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::kInfer;
  Tensor<T> normalized;      // x-hat, same shape as the input
  std::vector<T> inv_std;    // per feature
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

/// Normalizes over every axis but the last: an [N,F] matrix, or a
/// channels-last feature map treated as [N*H*W, C]. Train mode uses batch
/// statistics (biased variance) and folds them into `state`; infer mode uses
/// the running statistics.
template <typename T>
Tensor<T> batchnorm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                    BatchNormState<T>& state, Mode mode, BatchNormCache<T>* cache = nullptr,
                    BatchNormOptions options = {});

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_output);

// ---- dense / activations --------------------------------------------------

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weight,
                             const Tensor<T>& grad_output);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

/// Gradient of relu given its *output*.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_output);

// ---- GRU ------------------------------------------------------------------

/// Gate blocks are packed column-wise in the order [update z | reset r | candidate].
template <typename T>
struct GruWeights {
  Tensor<T> input_kernel;      // [F, 3H]
  Tensor<T> recurrent_kernel;  // [H, 3H]
  Tensor<T> bias;              // [3H]

  std::size_t input_size() const { return input_kernel.dim(0); }
  std::size_t hidden_size() const { return recurrent_kernel.dim(0); }
};

template <typename T>
struct GruGrads {
  Tensor<T> input_kernel;
  Tensor<T> recurrent_kernel;
  Tensor<T> bias;

  static GruGrads zeros_like(const GruWeights<T>& w) {
    return {Tensor<T>::zeros_like(w.input_kernel), Tensor<T>::zeros_like(w.recurrent_kernel),
            Tensor<T>::zeros_like(w.bias)};
  }
};

template <typename T>
struct GruStepCache {
  Tensor<T> input;      // [B,F]
  Tensor<T> h_prev;     // [B,H]
  Tensor<T> update;     // z
  Tensor<T> reset;      // r
  Tensor<T> candidate;  // h-tilde
};

/// One GRU step:
///   z = sigmoid(x Wz + h Uz + bz)
///   r = sigmoid(x Wr + h Ur + br)
///   c = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * c
/// `x` is [F] or [B,F]; `h_prev` matches with H.
template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x, const Tensor<T>& h_prev, const GruWeights<T>& weights,
                   GruStepCache<T>* cache = nullptr);

template <typename T>
struct GruStepInputGrads {
  Tensor<T> input;
  Tensor<T> h_prev;
};

/// Backward through one step. Weight gradients accumulate into `accum`.
template <typename T>
GruStepInputGrads<T> gru_cell_backward(const GruStepCache<T>& cache,
                                       const GruWeights<T>& weights, const Tensor<T>& grad_h,
                                       GruGrads<T>& accum);

template <typename T>
struct BiGruCache {
  Shape input_shape;
  std::vector<GruStepCache<T>> forward_steps;   // indexed by time
  std::vector<GruStepCache<T>> backward_steps;  // indexed by time
};

template <typename T>
struct BiGruGrads {
  Tensor<T> input;
  GruGrads<T> forward;
  GruGrads<T> backward;
};

/// Bidirectional GRU with zero initial states. Output step t is
/// [h_fwd(t), h_bwd(t)], width 2H.
template <typename T>
Tensor<T> bigru(const Tensor<T>& sequence, const GruWeights<T>& forward,
                const GruWeights<T>& backward, BiGruCache<T>* cache = nullptr);

template <typename T>
BiGruGrads<T> bigru_backward(const BiGruCache<T>& cache, const GruWeights<T>& forward,
                             const GruWeights<T>& backward, const Tensor<T>& grad_output);

// ---- loss -----------------------------------------------------------------

template <typename T>
struct XentResult {
  double loss = 0.0;       // mean over rows
  Tensor<T> probs;         // [N,K]
  Tensor<T> grad_logits;   // (p - onehot) / N
};

/// Max-shifted softmax followed by mean negative log-likelihood.
template <typename T>
XentResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels);

// ---- dropout --------------------------------------------------------------

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;  // 0 or 1/(1-rate); empty when dropout is the identity
};

/// Inverted dropout. Identity in infer mode or when rate == 0.
template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double rate, Mode mode, Prng& prng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_output);

}  // namespace avasd
