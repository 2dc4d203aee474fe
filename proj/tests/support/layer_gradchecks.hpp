#pragma once

// Finite-difference checks for each layer primitive. Every check builds a
// random instance from `seed`, contracts the layer output with a random
// projection R (loss = sum(R * y)), feeds R to the backward kernel and
// compares against central differences. Returns the max relative error.

#include <functional>
#include <string>
#include <vector>

#include "avasd/core/grad_check.hpp"
#include "avasd/core/ops.hpp"
#include "support/oracles.hpp"

namespace avasd::testing {

inline double project(const Tensor<double>& y, const Tensor<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

inline GradCheckTarget target(const std::string& name, Tensor<double>& values,
                              const Tensor<double>& analytic) {
  return {name, values.data(), analytic.data()};
}

inline double gradcheck_conv2d(std::uint64_t seed) {
  Prng prng(seed);
  auto in = oracle::random_tensor({2, 5, 6, 2}, prng);
  auto k = oracle::random_tensor({3, 3, 2, 3}, prng);
  auto b = oracle::random_tensor({3}, prng);
  const Stride2 s{2, 1};
  const Pad2 p{1, 1};
  auto r = oracle::random_tensor(conv2d(in, k, b, s, p).shape(), prng);
  auto g = conv2d_backward(in, k, r, s, p);
  auto loss = [&] { return project(conv2d(in, k, b, s, p), r); };
  std::vector<GradCheckTarget> t{target("input", in, g.input), target("kernel", k, g.kernel),
                                 target("bias", b, g.bias)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_conv3d(std::uint64_t seed) {
  Prng prng(seed);
  auto in = oracle::random_tensor({2, 5, 6, 5, 1}, prng);
  auto k = oracle::random_tensor({5, 3, 3, 1, 2}, prng);
  auto b = oracle::random_tensor({2}, prng);
  const Stride3 s{1, 2, 1};
  const Pad3 p{0, 1, 0};
  auto r = oracle::random_tensor(conv3d(in, k, b, s, p).shape(), prng);
  auto g = conv3d_backward(in, k, r, s, p);
  auto loss = [&] { return project(conv3d(in, k, b, s, p), r); };
  std::vector<GradCheckTarget> t{target("input", in, g.input), target("kernel", k, g.kernel),
                                 target("bias", b, g.bias)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_maxpool(std::uint64_t seed) {
  Prng prng(seed);
  auto in = oracle::random_tensor({2, 7, 6, 2}, prng);
  const Window2 w{3, 2};
  const Stride2 s{2, 2};
  auto fwd = maxpool2d(in, w, s);
  auto r = oracle::random_tensor(fwd.output.shape(), prng);
  auto gin = maxpool2d_backward(in.shape(), fwd.argmax, r);
  auto loss = [&] { return project(maxpool2d(in, w, s).output, r); };
  std::vector<GradCheckTarget> t{target("input", in, gin)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_batchnorm(std::uint64_t seed, Mode mode = Mode::kTrain) {
  Prng prng(seed);
  auto in = oracle::random_tensor({6, 4}, prng, -2.0, 2.0);
  auto gamma = oracle::random_tensor({4}, prng, 0.5, 1.5);
  auto beta = oracle::random_tensor({4}, prng);
  BatchNormState<double> state{oracle::random_tensor({4}, prng),
                               oracle::random_tensor({4}, prng, 0.5, 2.0)};
  auto run = [&](BatchNormCache<double>* cache) {
    BatchNormState<double> scratch = state;
    return batchnorm(in, gamma, beta, scratch, mode, cache);
  };
  BatchNormCache<double> cache;
  auto r = oracle::random_tensor(run(&cache).shape(), prng);
  auto g = batchnorm_backward(cache, gamma, r);
  auto loss = [&] { return project(run(nullptr), r); };
  std::vector<GradCheckTarget> t{target("input", in, g.input), target("gamma", gamma, g.gamma),
                                 target("beta", beta, g.beta)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_dense(std::uint64_t seed) {
  Prng prng(seed);
  auto in = oracle::random_tensor({3, 5}, prng);
  auto w = oracle::random_tensor({5, 4}, prng);
  auto b = oracle::random_tensor({4}, prng);
  auto r = oracle::random_tensor({3, 4}, prng);
  auto g = dense_backward(in, w, r);
  auto loss = [&] { return project(dense(in, w, b), r); };
  std::vector<GradCheckTarget> t{target("input", in, g.input), target("weight", w, g.weight),
                                 target("bias", b, g.bias)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_relu(std::uint64_t seed) {
  Prng prng(seed);
  auto in = oracle::random_tensor({4, 6}, prng);
  auto r = oracle::random_tensor({4, 6}, prng);
  auto gin = relu_backward(relu(in), r);
  auto loss = [&] { return project(relu(in), r); };
  std::vector<GradCheckTarget> t{target("input", in, gin)};
  return grad_check(loss, t).max_relative_error;
}

inline GruWeights<double> random_gru(std::size_t f, std::size_t h, Prng& prng) {
  return {oracle::random_tensor({f, 3 * h}, prng, -0.8, 0.8),
          oracle::random_tensor({h, 3 * h}, prng, -0.8, 0.8),
          oracle::random_tensor({3 * h}, prng, -0.5, 0.5)};
}

// Three-step unidirectional unroll through gru_cell with BPTT.
inline double gradcheck_gru_unroll(std::uint64_t seed) {
  Prng prng(seed);
  const std::size_t f = 3, h = 4, steps = 3, b = 2;
  GruWeights<double> w = random_gru(f, h, prng);
  std::vector<Tensor<double>> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(oracle::random_tensor({b, f}, prng));
  Tensor<double> h0 = oracle::random_tensor({b, h}, prng);
  std::vector<Tensor<double>> rs;
  for (std::size_t t = 0; t < steps; ++t) rs.push_back(oracle::random_tensor({b, h}, prng));

  auto loss = [&] {
    Tensor<double> state = h0;
    double s = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      state = gru_cell(xs[t], state, w);
      s += project(state, rs[t]);
    }
    return s;
  };

  std::vector<GruStepCache<double>> caches(steps);
  Tensor<double> state = h0;
  for (std::size_t t = 0; t < steps; ++t) state = gru_cell(xs[t], state, w, &caches[t]);
  auto acc = GruGrads<double>::zeros_like(w);
  std::vector<Tensor<double>> gx(steps);
  Tensor<double> carry({b, h});
  for (std::size_t s = steps; s-- > 0;) {
    Tensor<double> gh = carry;
    for (std::size_t i = 0; i < gh.size(); ++i) gh[i] += rs[s][i];
    auto step = gru_cell_backward(caches[s], w, gh, acc);
    gx[s] = step.input;
    carry = step.h_prev;
  }
  std::vector<GradCheckTarget> t{target("W", w.input_kernel, acc.input_kernel),
                                 target("U", w.recurrent_kernel, acc.recurrent_kernel),
                                 target("b", w.bias, acc.bias), target("h0", h0, carry)};
  for (std::size_t s = 0; s < steps; ++s)
    t.push_back(target("x" + std::to_string(s), xs[s], gx[s]));
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_bigru(std::uint64_t seed) {
  Prng prng(seed);
  const std::size_t b = 2, steps = 4, f = 3, h = 3;
  auto seq = oracle::random_tensor({b, steps, f}, prng);
  GruWeights<double> fw = random_gru(f, h, prng);
  GruWeights<double> bw = random_gru(f, h, prng);
  auto r = oracle::random_tensor({b, steps, 2 * h}, prng);
  BiGruCache<double> cache;
  bigru(seq, fw, bw, &cache);
  auto g = bigru_backward(cache, fw, bw, r);
  auto loss = [&] { return project(bigru(seq, fw, bw), r); };
  std::vector<GradCheckTarget> t{
      target("input", seq, g.input),
      target("fwd.W", fw.input_kernel, g.forward.input_kernel),
      target("fwd.U", fw.recurrent_kernel, g.forward.recurrent_kernel),
      target("fwd.b", fw.bias, g.forward.bias),
      target("bwd.W", bw.input_kernel, g.backward.input_kernel),
      target("bwd.U", bw.recurrent_kernel, g.backward.recurrent_kernel),
      target("bwd.b", bw.bias, g.backward.bias)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_softmax_xent(std::uint64_t seed) {
  Prng prng(seed);
  auto logits = oracle::random_tensor({6, 2}, prng, -3.0, 3.0);
  std::vector<int> labels(6);
  for (int& l : labels) l = static_cast<int>(prng.below(2));
  auto res = softmax_xent(logits, labels);
  auto loss = [&] { return softmax_xent(logits, labels).loss; };
  std::vector<GradCheckTarget> t{target("logits", logits, res.grad_logits)};
  return grad_check(loss, t).max_relative_error;
}

inline double gradcheck_dropout(std::uint64_t seed) {
  Prng prng(seed);
  auto in = oracle::random_tensor({5, 4}, prng);
  auto r = oracle::random_tensor({5, 4}, prng);
  const std::uint64_t mask_seed = prng.next_u64();
  auto run = [&] {
    Prng p(mask_seed);
    return dropout(in, 0.5, Mode::kTrain, p);
  };
  auto gin = dropout_backward(run().mask, r);
  auto loss = [&] { return project(run().output, r); };
  std::vector<GradCheckTarget> t{target("input", in, gin)};
  return grad_check(loss, t).max_relative_error;
}

struct NamedCheck {
  const char* name;
  std::function<double(std::uint64_t)> run;
};

inline std::vector<NamedCheck> all_layer_checks() {
  return {{"conv2d", gradcheck_conv2d},
          {"conv3d", gradcheck_conv3d},
          {"maxpool2d", gradcheck_maxpool},
          {"batchnorm(train)", [](std::uint64_t s) { return gradcheck_batchnorm(s); }},
          {"batchnorm(infer)",
           [](std::uint64_t s) { return gradcheck_batchnorm(s, Mode::kInfer); }},
          {"dense", gradcheck_dense},
          {"relu", gradcheck_relu},
          {"gru_cell(3-step BPTT)", gradcheck_gru_unroll},
          {"bigru", gradcheck_bigru},
          {"softmax_xent", gradcheck_softmax_xent},
          {"dropout", gradcheck_dropout}};
}

}  // namespace avasd::testing
