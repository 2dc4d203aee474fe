#include <cmath>
#include <string>

#include "avasd/core/ops.hpp"

namespace avasd {

template <typename T>
PoolResult<T> maxpool2d(const Tensor<T>& input, Window2 window, Stride2 stride) {
  const Shape& s = input.shape();
  const bool batched = s.size() == 4;
  if (!batched && s.size() != 3) {
    throw ShapeError("maxpool2d input must be [N,H,W,C] or [H,W,C], got " + shape_to_string(s));
  }
  const std::size_t n = batched ? s[0] : 1;
  const std::size_t h = s[batched ? 1 : 0];
  const std::size_t w = s[batched ? 2 : 1];
  const std::size_t c = s[batched ? 3 : 2];
  if (window.h == 0 || window.w == 0 || stride.h == 0 || stride.w == 0) {
    throw ShapeError("maxpool2d window and stride must be positive");
  }
  if (window.h > h || window.w > w) {
    throw ShapeError("maxpool2d window " + std::to_string(window.h) + "x" +
                     std::to_string(window.w) + " larger than input " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  const std::size_t oh = (h - window.h) / stride.h + 1;
  const std::size_t ow = (w - window.w) / stride.w + 1;
  Shape out_shape = batched ? Shape{n, oh, ow, c} : Shape{oh, ow, c};
  PoolResult<T> result{Tensor<T>(out_shape), std::vector<std::size_t>(n * oh * ow * c)};
  const T* in = input.data().data();
  T* out = result.output.data().data();

  std::size_t o = 0;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t ch = 0; ch < c; ++ch, ++o) {
          // Row-major scan + strict comparison keeps the lowest flat index on ties.
          std::size_t best = ((b * h + oy * stride.h) * w + ox * stride.w) * c + ch;
          for (std::size_t i = 0; i < window.h; ++i)
            for (std::size_t j = 0; j < window.w; ++j) {
              const std::size_t idx =
                  ((b * h + oy * stride.h + i) * w + ox * stride.w + j) * c + ch;
              if (in[idx] > in[best]) best = idx;
            }
          out[o] = in[best];
          result.argmax[o] = best;
        }
  return result;
}

template <typename T>
Tensor<T> maxpool2d_backward(const Shape& input_shape, std::span<const std::size_t> argmax,
                             const Tensor<T>& grad_output) {
  if (argmax.size() != grad_output.size()) {
    throw ShapeError("maxpool2d_backward: argmax length " + std::to_string(argmax.size()) +
                     " != grad_output size " + std::to_string(grad_output.size()));
  }
  Tensor<T> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_output[i];
  return grad;
}

template <typename T>
Tensor<T> batchnorm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                    BatchNormState<T>& state, Mode mode, BatchNormCache<T>* cache,
                    BatchNormOptions options) {
  if (input.rank() < 2) {
    throw ShapeError("batchnorm input must have rank >= 2, got " +
                     shape_to_string(input.shape()));
  }
  const std::size_t f = input.shape().back();
  const std::size_t n = input.size() / f;
  auto check_vec = [f](const Tensor<T>& t, const char* name) {
    if (t.rank() != 1 || t.dim(0) != f) {
      throw ShapeError(std::string("batchnorm ") + name + " must be [F=" + std::to_string(f) +
                       "], got " + shape_to_string(t.shape()));
    }
  };
  check_vec(gamma, "gamma");
  check_vec(beta, "beta");
  check_vec(state.running_mean, "running_mean");
  check_vec(state.running_var, "running_var");
  if (mode == Mode::kTrain && n < 2) {
    throw ShapeError("batchnorm in train mode needs N >= 2 rows, got " + std::to_string(n));
  }

  const T* x = input.data().data();
  std::vector<T> mean(f, T{0}), var(f, T{0});
  if (mode == Mode::kTrain) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) mean[j] += x[i * f + j];
    for (std::size_t j = 0; j < f; ++j) mean[j] /= static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) {
        const T d = x[i * f + j] - mean[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < f; ++j) var[j] /= static_cast<T>(n);
    const T decay = static_cast<T>(options.decay);
    for (std::size_t j = 0; j < f; ++j) {
      state.running_mean[j] = decay * state.running_mean[j] + (T{1} - decay) * mean[j];
      state.running_var[j] = decay * state.running_var[j] + (T{1} - decay) * var[j];
    }
  } else {
    for (std::size_t j = 0; j < f; ++j) {
      mean[j] = state.running_mean[j];
      var[j] = state.running_var[j];
    }
  }

  std::vector<T> inv_std(f);
  for (std::size_t j = 0; j < f; ++j)
    inv_std[j] = T{1} / std::sqrt(var[j] + static_cast<T>(options.epsilon));

  Tensor<T> out(input.shape());
  Tensor<T> xhat;
  if (cache) xhat = Tensor<T>(input.shape());
  T* y = out.data().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const T nx = (x[i * f + j] - mean[j]) * inv_std[j];
      if (cache) xhat[i * f + j] = nx;
      y[i * f + j] = gamma[j] * nx + beta[j];
    }
  if (cache) {
    cache->mode = mode;
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_output) {
  const Tensor<T>& xhat = cache.normalized;
  if (grad_output.shape() != xhat.shape()) {
    throw ShapeError("batchnorm_backward: grad_output " + shape_to_string(grad_output.shape()) +
                     " vs cached " + shape_to_string(xhat.shape()));
  }
  const std::size_t f = xhat.shape().back();
  const std::size_t n = xhat.size() / f;
  BatchNormGrads<T> g{Tensor<T>(xhat.shape()), Tensor<T>({f}), Tensor<T>({f})};
  const T* dy = grad_output.data().data();
  const T* xh = xhat.data().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      g.beta[j] += dy[i * f + j];
      g.gamma[j] += dy[i * f + j] * xh[i * f + j];
    }

  T* dx = g.input.data().data();
  if (cache.mode == Mode::kInfer) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) dx[i * f + j] = dy[i * f + j] * gamma[j] * cache.inv_std[j];
    return g;
  }
  // Full derivative through the batch mean and variance:
  //   dx = inv_std / N * (N * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
  // with dxhat = dy * gamma, so sum(dxhat) = gamma * dbeta and
  // sum(dxhat * xhat) = gamma * dgamma.
  const T nn = static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const T dxhat = dy[i * f + j] * gamma[j];
      dx[i * f + j] = cache.inv_std[j] / nn *
                      (nn * dxhat - gamma[j] * g.beta[j] - xh[i * f + j] * gamma[j] * g.gamma[j]);
    }
  return g;
}

#define AVASD_INSTANTIATE_POOL_NORM(T)                                                       \
  template PoolResult<T> maxpool2d(const Tensor<T>&, Window2, Stride2);                      \
  template Tensor<T> maxpool2d_backward(const Shape&, std::span<const std::size_t>,          \
                                        const Tensor<T>&);                                   \
  template Tensor<T> batchnorm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                               BatchNormState<T>&, Mode, BatchNormCache<T>*,                 \
                               BatchNormOptions);                                            \
  template BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>&, const Tensor<T>&, \
                                                const Tensor<T>&);

AVASD_INSTANTIATE_POOL_NORM(float)
AVASD_INSTANTIATE_POOL_NORM(double)

}  // namespace avasd
