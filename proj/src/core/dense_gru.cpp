#include <algorithm>
#include <cmath>
#include <string>

#include "avasd/core/ops.hpp"
#include "linalg.hpp"

namespace avasd {
namespace {

template <typename T>
T sigmoid(T v) {
  return T{1} / (T{1} + std::exp(-v));
}

// Views a [F] vector as a one-row batch.
template <typename T>
std::size_t batch_rows(const Tensor<T>& t, std::size_t width, const char* what) {
  if (t.rank() == 1 && t.dim(0) == width) return 1;
  if (t.rank() == 2 && t.dim(1) == width) return t.dim(0);
  throw ShapeError(std::string("gru ") + what + " must be [" + std::to_string(width) + "] or [B," +
                   std::to_string(width) + "], got " + shape_to_string(t.shape()));
}

template <typename T>
void check_gru_weights(const GruWeights<T>& w) {
  if (w.input_kernel.rank() != 2 || w.recurrent_kernel.rank() != 2 || w.bias.rank() != 1) {
    throw ShapeError("gru weights must be kernel [F,3H], recurrent [H,3H], bias [3H]");
  }
  const std::size_t h = w.recurrent_kernel.dim(0);
  if (w.recurrent_kernel.dim(1) != 3 * h || w.input_kernel.dim(1) != 3 * h ||
      w.bias.dim(0) != 3 * h) {
    throw ShapeError("gru weight widths disagree: input " +
                     shape_to_string(w.input_kernel.shape()) + ", recurrent " +
                     shape_to_string(w.recurrent_kernel.shape()) + ", bias " +
                     shape_to_string(w.bias.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("dense expects input [N,F], weight [F,G], bias [G]");
  }
  const std::size_t n = input.dim(0), f = input.dim(1), g = weight.dim(1);
  if (weight.dim(0) != f) {
    throw ShapeError("dense inner dimension: input F=" + std::to_string(f) + ", weight rows " +
                     std::to_string(weight.dim(0)));
  }
  if (bias.dim(0) != g) {
    throw ShapeError("dense bias length " + std::to_string(bias.dim(0)) + " != G=" +
                     std::to_string(g));
  }
  Tensor<T> out({n, g});
  T* o = out.data().data();
  for (std::size_t i = 0; i < n; ++i) std::copy_n(bias.data().data(), g, o + i * g);
  detail::gemm_acc(input.data().data(), weight.data().data(), o, n, f, g);
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weight,
                             const Tensor<T>& grad_output) {
  const std::size_t n = input.dim(0), f = input.dim(1), g = weight.dim(1);
  if (grad_output.rank() != 2 || grad_output.dim(0) != n || grad_output.dim(1) != g) {
    throw ShapeError("dense_backward: grad_output " + shape_to_string(grad_output.shape()) +
                     " expected [" + std::to_string(n) + "," + std::to_string(g) + "]");
  }
  DenseGrads<T> grads{Tensor<T>({n, f}), Tensor<T>({f, g}), Tensor<T>({g})};
  const T* go = grad_output.data().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < g; ++j) grads.bias[j] += go[i * g + j];
  detail::gemm_at_b_acc(input.data().data(), go, grads.weight.data().data(), n, f, g);
  detail::gemm_a_bt_acc(go, weight.data().data(), grads.input.data().data(), n, g, f);
  return grads;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_output) {
  if (output.shape() != grad_output.shape()) {
    throw ShapeError("relu_backward shape mismatch " + shape_to_string(output.shape()) + " vs " +
                     shape_to_string(grad_output.shape()));
  }
  Tensor<T> g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(output[i] > T{0})) g[i] = T{0};
  return g;
}

template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x, const Tensor<T>& h_prev, const GruWeights<T>& weights,
                   GruStepCache<T>* cache) {
  check_gru_weights(weights);
  const std::size_t f = weights.input_size();
  const std::size_t h = weights.hidden_size();
  const std::size_t b = batch_rows(x, f, "input");
  if (batch_rows(h_prev, h, "h_prev") != b) {
    throw ShapeError("gru batch mismatch between input " + shape_to_string(x.shape()) +
                     " and h_prev " + shape_to_string(h_prev.shape()));
  }
  const std::size_t g3 = 3 * h;
  const T* hp = h_prev.data().data();
  const T* u = weights.recurrent_kernel.data().data();

  std::vector<T> act(b * g3);
  for (std::size_t i = 0; i < b; ++i)
    std::copy_n(weights.bias.data().data(), g3, act.data() + i * g3);
  detail::gemm_acc(x.data().data(), weights.input_kernel.data().data(), act.data(), b, f, g3);
  // Recurrent contribution to the z and r blocks.
  for (std::size_t i = 0; i < b; ++i) {
    T* a = act.data() + i * g3;
    for (std::size_t p = 0; p < h; ++p) {
      const T hv = hp[i * h + p];
      const T* urow = u + p * g3;
      for (std::size_t j = 0; j < 2 * h; ++j) a[j] += hv * urow[j];
    }
  }
  Tensor<T> z({b, h}), r({b, h}), c({b, h});
  std::vector<T> rh(b * h);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      z[i * h + j] = sigmoid(act[i * g3 + j]);
      r[i * h + j] = sigmoid(act[i * g3 + h + j]);
      rh[i * h + j] = r[i * h + j] * hp[i * h + j];
    }
  for (std::size_t i = 0; i < b; ++i) {
    T* a = act.data() + i * g3 + 2 * h;
    for (std::size_t p = 0; p < h; ++p) {
      const T v = rh[i * h + p];
      const T* urow = u + p * g3 + 2 * h;
      for (std::size_t j = 0; j < h; ++j) a[j] += v * urow[j];
    }
  }
  Tensor<T> out(h_prev.shape());
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      const std::size_t k = i * h + j;
      c[k] = std::tanh(act[i * g3 + 2 * h + j]);
      out[k] = (T{1} - z[k]) * hp[k] + z[k] * c[k];
    }
  if (cache) {
    cache->input = x.reshaped({b, f});
    cache->h_prev = h_prev.reshaped({b, h});
    cache->update = std::move(z);
    cache->reset = std::move(r);
    cache->candidate = std::move(c);
  }
  return out;
}

template <typename T>
GruStepInputGrads<T> gru_cell_backward(const GruStepCache<T>& cache,
                                       const GruWeights<T>& weights, const Tensor<T>& grad_h,
                                       GruGrads<T>& accum) {
  const std::size_t b = cache.h_prev.dim(0);
  const std::size_t h = weights.hidden_size();
  const std::size_t f = weights.input_size();
  const std::size_t g3 = 3 * h;
  if (grad_h.size() != b * h) {
    throw ShapeError("gru_cell_backward: grad_h " + shape_to_string(grad_h.shape()) +
                     " expected " + std::to_string(b) + "x" + std::to_string(h));
  }
  const T* gh = grad_h.data().data();
  const T* hp = cache.h_prev.data().data();
  const T* z = cache.update.data().data();
  const T* r = cache.reset.data().data();
  const T* c = cache.candidate.data().data();
  const T* u = weights.recurrent_kernel.data().data();

  GruStepInputGrads<T> out{Tensor<T>({b, f}), Tensor<T>({b, h})};
  T* dhp = out.h_prev.data().data();
  std::vector<T> dact(b * g3);  // pre-activation grads [dz | dr | dc]
  std::vector<T> rh(b * h);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      const std::size_t k = i * h + j;
      const T dz = gh[k] * (c[k] - hp[k]);
      const T dc = gh[k] * z[k];
      dhp[k] = gh[k] * (T{1} - z[k]);
      dact[i * g3 + j] = dz * z[k] * (T{1} - z[k]);
      dact[i * g3 + 2 * h + j] = dc * (T{1} - c[k] * c[k]);
      rh[k] = r[k] * hp[k];
    }
  // Through the reset gate: d(r*h) = dc_pre * Uh^T.
  for (std::size_t i = 0; i < b; ++i) {
    const T* dah = dact.data() + i * g3 + 2 * h;
    for (std::size_t p = 0; p < h; ++p) {
      const T* urow = u + p * g3 + 2 * h;
      T drh = T{0};
      for (std::size_t j = 0; j < h; ++j) drh += dah[j] * urow[j];
      const std::size_t k = i * h + p;
      dhp[k] += drh * r[k];
      const T dr = drh * hp[k];
      dact[i * g3 + h + p] = dr * r[k] * (T{1} - r[k]);
    }
  }
  // Recurrent path through z and r.
  for (std::size_t i = 0; i < b; ++i) {
    const T* da = dact.data() + i * g3;
    for (std::size_t p = 0; p < h; ++p) {
      const T* urow = u + p * g3;
      T acc = T{0};
      for (std::size_t j = 0; j < 2 * h; ++j) acc += da[j] * urow[j];
      dhp[i * h + p] += acc;
    }
  }
  // Weight gradients.
  T* gu = accum.recurrent_kernel.data().data();
  for (std::size_t i = 0; i < b; ++i) {
    const T* da = dact.data() + i * g3;
    for (std::size_t j = 0; j < g3; ++j) accum.bias[j] += da[j];
    for (std::size_t p = 0; p < h; ++p) {
      const T hv = hp[i * h + p];
      const T rv = rh[i * h + p];
      T* gurow = gu + p * g3;
      for (std::size_t j = 0; j < 2 * h; ++j) gurow[j] += hv * da[j];
      for (std::size_t j = 2 * h; j < g3; ++j) gurow[j] += rv * da[j];
    }
  }
  detail::gemm_at_b_acc(cache.input.data().data(), dact.data(),
                        accum.input_kernel.data().data(), b, f, g3);
  detail::gemm_a_bt_acc(dact.data(), weights.input_kernel.data().data(),
                        out.input.data().data(), b, g3, f);
  return out;
}

namespace {

struct SeqDims {
  std::size_t b, t, f;
  bool batched;
};

SeqDims seq_dims(const Shape& s) {
  if (s.size() == 3) return {s[0], s[1], s[2], true};
  if (s.size() == 2) return {1, s[0], s[1], false};
  throw ShapeError("bigru input must be [B,T,F] or [T,F], got " + shape_to_string(s));
}

template <typename T>
Tensor<T> gather_step(const Tensor<T>& seq, const SeqDims& d, std::size_t t) {
  Tensor<T> x({d.b, d.f});
  for (std::size_t i = 0; i < d.b; ++i)
    std::copy_n(seq.data().data() + (i * d.t + t) * d.f, d.f, x.data().data() + i * d.f);
  return x;
}

}  // namespace

template <typename T>
Tensor<T> bigru(const Tensor<T>& sequence, const GruWeights<T>& forward,
                const GruWeights<T>& backward, BiGruCache<T>* cache) {
  const SeqDims d = seq_dims(sequence.shape());
  check_gru_weights(forward);
  check_gru_weights(backward);
  if (forward.input_size() != d.f || backward.input_size() != d.f) {
    throw ShapeError("bigru input width " + std::to_string(d.f) + " != kernel rows " +
                     std::to_string(forward.input_size()) + "/" +
                     std::to_string(backward.input_size()));
  }
  const std::size_t h = forward.hidden_size();
  if (backward.hidden_size() != h) throw ShapeError("bigru directions must share hidden size");

  Shape out_shape = d.batched ? Shape{d.b, d.t, 2 * h} : Shape{d.t, 2 * h};
  Tensor<T> out(out_shape);
  if (cache) {
    cache->input_shape = sequence.shape();
    cache->forward_steps.assign(d.t, {});
    cache->backward_steps.assign(d.t, {});
  }
  auto run = [&](const GruWeights<T>& w, bool reverse) {
    Tensor<T> state({d.b, h});
    for (std::size_t s = 0; s < d.t; ++s) {
      const std::size_t t = reverse ? d.t - 1 - s : s;
      GruStepCache<T>* step_cache = nullptr;
      if (cache) step_cache = reverse ? &cache->backward_steps[t] : &cache->forward_steps[t];
      state = gru_cell(gather_step(sequence, d, t), state, w, step_cache);
      const std::size_t lane = reverse ? h : 0;
      for (std::size_t i = 0; i < d.b; ++i)
        std::copy_n(state.data().data() + i * h, h,
                    out.data().data() + (i * d.t + t) * 2 * h + lane);
    }
  };
  run(forward, false);
  run(backward, true);
  return out;
}

template <typename T>
BiGruGrads<T> bigru_backward(const BiGruCache<T>& cache, const GruWeights<T>& forward,
                             const GruWeights<T>& backward, const Tensor<T>& grad_output) {
  const SeqDims d = seq_dims(cache.input_shape);
  const std::size_t h = forward.hidden_size();
  if (grad_output.size() != d.b * d.t * 2 * h) {
    throw ShapeError("bigru_backward: grad_output " + shape_to_string(grad_output.shape()) +
                     " does not match cached sequence " + shape_to_string(cache.input_shape));
  }
  BiGruGrads<T> grads{Tensor<T>(cache.input_shape), GruGrads<T>::zeros_like(forward),
                      GruGrads<T>::zeros_like(backward)};

  auto run = [&](const GruWeights<T>& w, GruGrads<T>& accum,
                 const std::vector<GruStepCache<T>>& steps, bool reverse) {
    Tensor<T> carry({d.b, h});
    const std::size_t lane = reverse ? h : 0;
    // Walk time opposite to the forward recurrence.
    for (std::size_t s = 0; s < d.t; ++s) {
      const std::size_t t = reverse ? s : d.t - 1 - s;
      Tensor<T> gh = carry;
      for (std::size_t i = 0; i < d.b; ++i)
        for (std::size_t j = 0; j < h; ++j)
          gh[i * h + j] += grad_output[(i * d.t + t) * 2 * h + lane + j];
      GruStepInputGrads<T> step = gru_cell_backward(steps[t], w, gh, accum);
      for (std::size_t i = 0; i < d.b; ++i)
        for (std::size_t j = 0; j < d.f; ++j)
          grads.input[(i * d.t + t) * d.f + j] += step.input[i * d.f + j];
      carry = std::move(step.h_prev);
    }
  };
  run(forward, grads.forward, cache.forward_steps, false);
  run(backward, grads.backward, cache.backward_steps, true);
  return grads;
}

template <typename T>
XentResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw ShapeError("softmax_xent logits must be [N,K], got " + shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  XentResult<T> res{0.0, Tensor<T>({n, k}), Tensor<T>({n, k})};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw ArgumentError("softmax_xent: label " + std::to_string(label) + " at row " +
                          std::to_string(i) + " outside [0," + std::to_string(k) + ")");
    }
    const T* row = logits.data().data() + i * k;
    const T mx = *std::max_element(row, row + k);
    T sum = T{0};
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
    const T log_sum = std::log(sum);
    for (std::size_t j = 0; j < k; ++j) {
      const T p = std::exp(row[j] - mx - log_sum);
      res.probs[i * k + j] = p;
      res.grad_logits[i * k + j] =
          (p - (static_cast<std::size_t>(label) == j ? T{1} : T{0})) / static_cast<T>(n);
    }
    total += static_cast<double>(log_sum - (row[label] - mx));
  }
  res.loss = total / static_cast<double>(n);
  return res;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& input, double rate, Mode mode, Prng& prng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout rate must be in [0,1), got " + std::to_string(rate));
  }
  if (mode == Mode::kInfer || rate == 0.0) return {input, Tensor<T>()};
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  DropoutResult<T> res{input, Tensor<T>(input.shape())};
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T m = prng.uniform() < rate ? T{0} : scale;
    res.mask[i] = m;
    res.output[i] *= m;
  }
  return res;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_output) {
  if (mask.empty()) return grad_output;
  if (mask.shape() != grad_output.shape()) throw ShapeError("dropout_backward shape mismatch");
  Tensor<T> g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return g;
}

#define AVASD_INSTANTIATE_DENSE_GRU(T)                                                        \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template DenseGrads<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> relu(const Tensor<T>&);                                                  \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> gru_cell(const Tensor<T>&, const Tensor<T>&, const GruWeights<T>&,       \
                              GruStepCache<T>*);                                              \
  template GruStepInputGrads<T> gru_cell_backward(const GruStepCache<T>&,                     \
                                                  const GruWeights<T>&, const Tensor<T>&,     \
                                                  GruGrads<T>&);                              \
  template Tensor<T> bigru(const Tensor<T>&, const GruWeights<T>&, const GruWeights<T>&,      \
                           BiGruCache<T>*);                                                   \
  template BiGruGrads<T> bigru_backward(const BiGruCache<T>&, const GruWeights<T>&,           \
                                        const GruWeights<T>&, const Tensor<T>&);              \
  template XentResult<T> softmax_xent(const Tensor<T>&, std::span<const int>);                \
  template DropoutResult<T> dropout(const Tensor<T>&, double, Mode, Prng&);                   \
  template Tensor<T> dropout_backward(const Tensor<T>&, const Tensor<T>&);

AVASD_INSTANTIATE_DENSE_GRU(float)
AVASD_INSTANTIATE_DENSE_GRU(double)

}  // namespace avasd
