#include <doctest.h>

#include <cmath>
#include <numeric>

#include "avasd/core/grad_check.hpp"
#include "avasd/core/ops.hpp"
#include "avasd/core/parameter.hpp"
#include "support/layer_gradchecks.hpp"
#include "support/oracles.hpp"

using namespace avasd;

namespace {

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("tensor rejects zero extents and mismatched data") {
  CHECK_THROWS_AS(Tensor<double>({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>(3)), ShapeError);
  Tensor<double> t({2, 3, 4});
  t(1, 2, 3) = 7.0;
  CHECK(t[(1 * 3 + 2) * 4 + 3] == 7.0);
  CHECK_THROWS_AS(t.reshape({5, 5}), ShapeError);
}

TEST_CASE("prng streams are reproducible") {
  Prng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    (void)c;
  }
  Prng s1 = Prng::for_stream(7, 1), s1b = Prng::for_stream(7, 1), s2 = Prng::for_stream(7, 2);
  const auto x = s1.next_u64();
  CHECK(x == s1b.next_u64());
  CHECK(x != s2.next_u64());
  Prng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.below(5) < 5);
  }
}

TEST_CASE("conv2d") {
  SUBCASE("1x1 identity") {
    Tensor<double> in({1, 1, 1}, std::vector<double>{3.5});
    Tensor<double> k({1, 1, 1, 1}, std::vector<double>{1.0});
    Tensor<double> b({1});
    CHECK(conv2d(in, k, b) == in);
  }
  SUBCASE("3x3 of ones sums to 9*Cin") {
    Tensor<double> in({3, 3, 4}, 1.0);
    Tensor<double> k({3, 3, 4, 1}, 1.0);
    auto out = conv2d(in, k, Tensor<double>({1}));
    CHECK(out.shape() == Shape{1, 1, 1});
    CHECK(out[0] == 36.0);
  }
  SUBCASE("random instance equals nested-loop oracle") {
    Prng prng(11);
    auto in = oracle::random_tensor({7, 9, 2}, prng);
    auto k = oracle::random_tensor({3, 3, 2, 4}, prng);
    auto b = oracle::random_tensor({4}, prng);
    auto got = conv2d(in, k, b, {2, 2}, {1, 1});
    auto want = oracle::conv2d(in, k, b, 2, 2, 1, 1);
    CHECK(got.shape() == Shape{4, 5, 4});
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
  SUBCASE("channel mismatch names the dimension") {
    Tensor<double> in({4, 4, 3});
    Tensor<double> k({3, 3, 2, 1});
    try {
      conv2d(in, k, Tensor<double>({1}));
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("Cin") != std::string::npos);
    }
    CHECK_THROWS_AS(conv2d(Tensor<double>({2, 2, 1}), Tensor<double>({3, 3, 1, 1}),
                           Tensor<double>({1})),
                    ShapeError);
  }
  SUBCASE("gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) CHECK(testing::gradcheck_conv2d(seed) < 1e-4);
  }
}

TEST_CASE("conv3d") {
  SUBCASE("zero kernel gives constant bias") {
    Tensor<double> in({5, 6, 6, 1}, 3.0);
    Tensor<double> k({5, 3, 3, 1, 2});
    Tensor<double> b({2}, std::vector<double>{0.25, -1.5});
    auto out = conv3d(in, k, b);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == b[i % 2]);
  }
  SUBCASE("visual front-end geometry 5x100x100 -> 1x47x47x96") {
    Prng prng(3);
    auto in = oracle::random_tensor({5, 100, 100, 1}, prng);
    auto k = oracle::random_tensor({5, 7, 7, 1, 96}, prng, -0.1, 0.1);
    auto b = oracle::random_tensor({96}, prng);
    auto got = conv3d(in, k, b, {1, 2, 2});
    CHECK(got.shape() == Shape{1, 47, 47, 96});
    const std::size_t stride[3] = {1, 2, 2}, pad[3] = {0, 0, 0};
    CHECK(max_abs_diff(got, oracle::conv3d(in, k, b, stride, pad)) < 1e-12);
  }
  SUBCASE("small random instance equals eight-loop oracle") {
    Prng prng(5);
    auto in = oracle::random_tensor({5, 9, 9, 2}, prng);
    auto k = oracle::random_tensor({3, 3, 3, 2, 3}, prng);
    auto b = oracle::random_tensor({3}, prng);
    const std::size_t stride[3] = {1, 2, 2}, pad[3] = {1, 1, 0};
    auto got = conv3d(in, k, b, {1, 2, 2}, {1, 1, 0});
    CHECK(max_abs_diff(got, oracle::conv3d(in, k, b, stride, pad)) < 1e-12);
  }
  SUBCASE("batched input runs each sample independently") {
    Prng prng(8);
    auto in = oracle::random_tensor({2, 5, 8, 8, 1}, prng);
    auto k = oracle::random_tensor({5, 3, 3, 1, 2}, prng);
    auto b = oracle::random_tensor({2}, prng);
    auto both = conv3d(in, k, b, {1, 2, 2});
    Tensor<double> second({5, 8, 8, 1},
                          std::vector<double>(in.data().begin() + 320, in.data().end()));
    auto one = conv3d(second, k, b, {1, 2, 2});
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(both[one.size() + i] == one[i]);
  }
  SUBCASE("gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) CHECK(testing::gradcheck_conv3d(seed) < 1e-4);
  }
}

TEST_CASE("maxpool2d") {
  SUBCASE("constant input keeps the first index of each window") {
    Tensor<double> in({4, 4, 1}, 2.0);
    auto res = maxpool2d(in, {2, 2}, {2, 2});
    for (std::size_t i = 0; i < res.output.size(); ++i) CHECK(res.output[i] == 2.0);
    CHECK(res.argmax == std::vector<std::size_t>{0, 2, 8, 10});
  }
  SUBCASE("0..15 grid") {
    Tensor<double> in({4, 4, 1});
    std::iota(in.data().begin(), in.data().end(), 0.0);
    auto res = maxpool2d(in, {2, 2}, {2, 2});
    CHECK(res.output.vector() == std::vector<double>{5, 7, 13, 15});
  }
  SUBCASE("window larger than input") {
    CHECK_THROWS_AS(maxpool2d(Tensor<double>({2, 2, 1}), {3, 3}, {1, 1}), ShapeError);
  }
  SUBCASE("gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) CHECK(testing::gradcheck_maxpool(seed) < 1e-6);
  }
}

TEST_CASE("batchnorm") {
  SUBCASE("standardized batch passes through") {
    Tensor<double> in({4, 1}, std::vector<double>{-1, -1, 1, 1});  // mean 0, biased var 1
    Tensor<double> gamma({1}, 1.0), beta({1});
    auto state = BatchNormState<double>::identity(1);
    auto out = batchnorm(in, gamma, beta, state, Mode::kTrain);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(in[i]).epsilon(1e-5));
    // running stats moved 10% toward the batch statistics
    CHECK(state.running_mean[0] == doctest::Approx(0.0));
    CHECK(state.running_var[0] == doctest::Approx(1.0));
  }
  SUBCASE("gamma zero broadcasts beta") {
    Prng prng(2);
    auto in = oracle::random_tensor({5, 3}, prng);
    Tensor<double> gamma({3}), beta({3}, std::vector<double>{1, 2, 3});
    auto state = BatchNormState<double>::identity(3);
    auto out = batchnorm(in, gamma, beta, state, Mode::kTrain);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == beta[i % 3]);
  }
  SUBCASE("running statistics decay 0.9") {
    Tensor<double> in({2, 1}, std::vector<double>{1.0, 3.0});
    auto state = BatchNormState<double>::identity(1);
    batchnorm(in, Tensor<double>({1}, 1.0), Tensor<double>({1}), state, Mode::kTrain);
    CHECK(state.running_mean[0] == doctest::Approx(0.2));
    CHECK(state.running_var[0] == doctest::Approx(0.9 + 0.1 * 1.0));
  }
  SUBCASE("train mode needs two rows") {
    auto state = BatchNormState<double>::identity(2);
    CHECK_THROWS_AS(batchnorm(Tensor<double>({1, 2}), Tensor<double>({2}, 1.0),
                              Tensor<double>({2}), state, Mode::kTrain),
                    ShapeError);
    CHECK_NOTHROW(batchnorm(Tensor<double>({1, 2}), Tensor<double>({2}, 1.0), Tensor<double>({2}),
                            state, Mode::kInfer));
  }
  SUBCASE("gradients (coupled train path and infer path)") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      CHECK(testing::gradcheck_batchnorm(seed) < 1e-4);
      CHECK(testing::gradcheck_batchnorm(seed, Mode::kInfer) < 1e-4);
    }
  }
}

TEST_CASE("dense") {
  SUBCASE("identity weight") {
    Prng prng(1);
    auto in = oracle::random_tensor({3, 4}, prng);
    Tensor<double> w({4, 4});
    for (std::size_t i = 0; i < 4; ++i) w(i, i) = 1.0;
    CHECK(dense(in, w, Tensor<double>({4})) == in);
  }
  SUBCASE("hand sum") {
    Tensor<double> in({1, 2}, std::vector<double>{1, 2});
    Tensor<double> w({2, 1}, std::vector<double>{1, 1});
    Tensor<double> b({1}, std::vector<double>{3});
    CHECK(dense(in, w, b)[0] == 6.0);
  }
  SUBCASE("random shapes equal triple-loop oracle") {
    Prng prng(9);
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t n = 1 + prng.below(6), f = 1 + prng.below(9), g = 1 + prng.below(7);
      auto in = oracle::random_tensor({n, f}, prng);
      auto w = oracle::random_tensor({f, g}, prng);
      auto b = oracle::random_tensor({g}, prng);
      CHECK(max_abs_diff(dense(in, w, b), oracle::dense(in, w, b)) < 1e-12);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(dense(Tensor<double>({2, 3}), Tensor<double>({4, 1}), Tensor<double>({1})),
                    ShapeError);
  }
  SUBCASE("gradients") { CHECK(testing::gradcheck_dense(4) < 1e-6); }
}

TEST_CASE("gru_cell") {
  SUBCASE("zero weights halve the state") {
    GruWeights<double> w{Tensor<double>({2, 9}), Tensor<double>({3, 9}), Tensor<double>({9})};
    Tensor<double> x({2}, std::vector<double>{0.3, -0.7});
    Tensor<double> h({3}, std::vector<double>{1.0, -2.0, 0.5});
    auto out = gru_cell(x, h, w);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(0.5 * h[i]));
  }
  SUBCASE("saturated update gate keeps h at zero") {
    Prng prng(4);
    GruWeights<double> w = testing::random_gru(2, 3, prng);
    for (std::size_t j = 0; j < 3; ++j) w.bias[j] = -60.0;
    Tensor<double> x({2}, std::vector<double>{0.5, 0.5});
    auto out = gru_cell(x, Tensor<double>({3}), w);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out[i]) < 1e-20);
  }
  SUBCASE("matches scalar oracle") {
    Prng prng(6);
    GruWeights<double> w = testing::random_gru(3, 4, prng);
    auto x = oracle::random_tensor({3}, prng);
    auto h = oracle::random_tensor({4}, prng);
    auto got = gru_cell(x, h, w);
    auto want = oracle::gru_step(x.vector(), h.vector(), w.input_kernel, w.recurrent_kernel,
                                 w.bias);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }
  SUBCASE("three-step BPTT gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
      CHECK(testing::gradcheck_gru_unroll(seed) < 1e-4);
  }
  SUBCASE("shape mismatch") {
    Prng prng(1);
    GruWeights<double> w = testing::random_gru(3, 4, prng);
    CHECK_THROWS_AS(gru_cell(Tensor<double>({2}), Tensor<double>({4}), w), ShapeError);
  }
}

TEST_CASE("bigru") {
  Prng prng(21);
  const std::size_t f = 3, h = 2;
  GruWeights<double> fw = testing::random_gru(f, h, prng);
  GruWeights<double> bw = testing::random_gru(f, h, prng);

  SUBCASE("single step is the two cells side by side") {
    auto x = oracle::random_tensor({1, f}, prng);
    auto out = bigru(x, fw, bw);
    auto a = gru_cell(x, Tensor<double>({1, h}), fw);
    auto b = gru_cell(x, Tensor<double>({1, h}), bw);
    CHECK(out.shape() == Shape{1, 2 * h});
    for (std::size_t j = 0; j < h; ++j) {
      CHECK(out[j] == a[j]);
      CHECK(out[h + j] == b[j]);
    }
  }
  SUBCASE("palindrome with shared weights is self-reversing with halves swapped") {
    auto half = oracle::random_tensor({3, f}, prng);
    Tensor<double> seq({5, f});
    for (std::size_t t = 0; t < 5; ++t) {
      const std::size_t src = t < 3 ? t : 4 - t;
      for (std::size_t j = 0; j < f; ++j) seq(t, j) = half(src, j);
    }
    auto out = bigru(seq, fw, fw);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t j = 0; j < h; ++j) {
        CHECK(std::abs(out(t, j) - out(4 - t, h + j)) < 1e-14);
      }
  }
  SUBCASE("random T=4 equals step-by-step scalar oracle") {
    auto seq = oracle::random_tensor({4, f}, prng);
    auto out = bigru(seq, fw, bw);
    std::vector<double> hf(h, 0.0), hb(h, 0.0);
    std::vector<std::vector<double>> fwd(4), bwd(4);
    for (std::size_t t = 0; t < 4; ++t) {
      std::vector<double> x(seq.data().begin() + t * f, seq.data().begin() + (t + 1) * f);
      hf = oracle::gru_step(x, hf, fw.input_kernel, fw.recurrent_kernel, fw.bias);
      fwd[t] = hf;
    }
    for (std::size_t s = 4; s-- > 0;) {
      std::vector<double> x(seq.data().begin() + s * f, seq.data().begin() + (s + 1) * f);
      hb = oracle::gru_step(x, hb, bw.input_kernel, bw.recurrent_kernel, bw.bias);
      bwd[s] = hb;
    }
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t j = 0; j < h; ++j) {
        CHECK(std::abs(out(t, j) - fwd[t][j]) < 1e-12);
        CHECK(std::abs(out(t, h + j) - bwd[t][j]) < 1e-12);
      }
  }
  SUBCASE("empty sequence cannot be formed") { CHECK_THROWS_AS(Tensor<double>({0, f}), ShapeError); }
  SUBCASE("gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) CHECK(testing::gradcheck_bigru(seed) < 1e-4);
  }
}

TEST_CASE("softmax_xent") {
  SUBCASE("equal logits give ln 2") {
    Tensor<double> logits({3, 2}, 0.7);
    std::vector<int> labels{0, 1, 1};
    auto res = softmax_xent(logits, labels);
    CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < res.probs.size(); ++i) CHECK(res.probs[i] == doctest::Approx(0.5));
  }
  SUBCASE("saturated correct logit") {
    Tensor<double> logits({1, 2}, std::vector<double>{30.0, -30.0});
    std::vector<int> labels{0};
    CHECK(softmax_xent(logits, labels).loss < 1e-20);
  }
  SUBCASE("rows are probability vectors") {
    Prng prng(3);
    auto logits = oracle::random_tensor({50, 2}, prng, -40.0, 40.0);
    std::vector<int> labels(50, 1);
    auto res = softmax_xent(logits, labels);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(std::abs(res.probs(i, 0) + res.probs(i, 1) - 1.0) < 1e-12);
      CHECK(res.probs(i, 0) > 0.0);
      CHECK(res.probs(i, 1) > 0.0);
    }
  }
  SUBCASE("label outside {0,1}") {
    Tensor<double> logits({1, 2});
    std::vector<int> labels{2};
    CHECK_THROWS_AS(softmax_xent(logits, labels), ArgumentError);
  }
  SUBCASE("gradients") { CHECK(testing::gradcheck_softmax_xent(5) < 1e-6); }
}

TEST_CASE("dropout") {
  Prng prng(17);
  Tensor<double> ones({1000, 1000}, 1.0);
  SUBCASE("rate zero and infer mode are the identity") {
    CHECK(dropout(ones, 0.0, Mode::kTrain, prng).output == ones);
    CHECK(dropout(ones, 0.5, Mode::kInfer, prng).output == ones);
  }
  SUBCASE("inverted scaling preserves the mean") {
    auto res = dropout(ones, 0.5, Mode::kTrain, prng);
    const double mean =
        std::accumulate(res.output.data().begin(), res.output.data().end(), 0.0) / 1e6;
    CHECK(std::abs(mean - 1.0) < 0.01);
  }
  SUBCASE("rate must be below one") {
    CHECK_THROWS_AS(dropout(ones, 1.0, Mode::kTrain, prng), ArgumentError);
  }
  SUBCASE("gradients") { CHECK(testing::gradcheck_dropout(2) < 1e-6); }
}

TEST_CASE("sgd_step") {
  SgdConfig cfg{0.01, 0.9, 0.0};
  SUBCASE("zero gradient leaves parameters alone") {
    Parameter<double> p("w", Tensor<double>({3}, std::vector<double>{1, 2, 3}));
    std::vector<Parameter<double>*> ps{&p};
    sgd_step<double>(ps, cfg);
    CHECK(p.value.vector() == std::vector<double>{1, 2, 3});
  }
  SUBCASE("two-step momentum recurrence") {
    Parameter<double> p("w", Tensor<double>({1}, 1.0));
    std::vector<Parameter<double>*> ps{&p};
    p.grad[0] = 1.0;
    sgd_step<double>(ps, cfg);
    CHECK(p.value[0] == doctest::Approx(0.99).epsilon(1e-14));
    CHECK(p.velocity[0] == doctest::Approx(1.0));
    CHECK(p.grad[0] == 0.0);
    p.grad[0] = 1.0;
    sgd_step<double>(ps, cfg);
    CHECK(p.velocity[0] == doctest::Approx(1.9).epsilon(1e-14));
    CHECK(p.value[0] == doctest::Approx(0.971).epsilon(1e-14));
  }
  SUBCASE("pure weight decay") {
    Parameter<double> p("w", Tensor<double>({1}, 2.0));
    std::vector<Parameter<double>*> ps{&p};
    sgd_step<double>(ps, SgdConfig{0.01, 0.9, 0.5});
    CHECK(p.value[0] == doctest::Approx(2.0 * (1.0 - 2.0 * 0.01 * 0.5)).epsilon(1e-14));
  }
  SUBCASE("non-finite gradient names the parameter") {
    Parameter<double> p("visual.conv1.kernel", Tensor<double>({2}, 1.0));
    std::vector<Parameter<double>*> ps{&p};
    p.grad[1] = std::nan("");
    try {
      sgd_step<double>(ps, cfg);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("visual.conv1.kernel") != std::string::npos);
    }
    CHECK(p.value[0] == 1.0);
  }
  SUBCASE("plain gradient descent decreases a convex quadratic monotonically") {
    // f(w) = 0.5 * sum c_i w_i^2, curvature max c = 4 -> any lr < 0.5 works.
    const std::vector<double> c{1.0, 4.0, 0.25};
    Parameter<double> p("w", Tensor<double>({3}, std::vector<double>{3, -2, 5}));
    std::vector<Parameter<double>*> ps{&p};
    auto f = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += 0.5 * c[i] * p.value[i] * p.value[i];
      return s;
    };
    double prev = f();
    for (int it = 0; it < 200; ++it) {
      for (std::size_t i = 0; i < 3; ++i) p.grad[i] = c[i] * p.value[i];
      sgd_step<double>(ps, SgdConfig{0.45, 0.0, 0.0});
      const double now = f();
      CHECK(now <= prev);
      prev = now;
    }
  }
}

TEST_CASE("grad_check harness") {
  SUBCASE("exact on a linear function") {
    Tensor<double> w({4}, std::vector<double>{0.1, -2.0, 3.0, 0.5});
    const std::vector<double> c{2.0, -1.0, 0.5, 4.0};
    Tensor<double> analytic({4}, c);
    auto loss = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 4; ++i) s += c[i] * w[i];
      return s;
    };
    std::vector<GradCheckTarget> t{{"w", w.data(), analytic.data()}};
    // No truncation error on a linear function, so a wide step isolates rounding.
    CHECK(grad_check(loss, t, 1e-3).max_relative_error < 1e-10);
  }
  SUBCASE("catches a sign-flipped backward") {
    Prng prng(3);
    auto in = oracle::random_tensor({3, 4}, prng);
    auto w = oracle::random_tensor({4, 2}, prng);
    auto b = oracle::random_tensor({2}, prng);
    auto r = oracle::random_tensor({3, 2}, prng);
    auto g = dense_backward(in, w, r);
    for (double& v : g.weight.data()) v = -v;
    auto loss = [&] { return testing::project(dense(in, w, b), r); };
    std::vector<GradCheckTarget> t{{"weight", w.data(), g.weight.data()}};
    CHECK(grad_check(loss, t).max_relative_error > 0.1);
    const double steps[] = {1e-4, 1e-5, 1e-3};
    const GradCheckResult multi = grad_check(loss, t, steps, 1e-5);
    CHECK(multi.max_relative_error > 0.1);
    CHECK(multi.retried == w.size());
  }
  SUBCASE("a second step size rescues a kink inside the first") {
    // relu(w) at w = 5e-5: the step 1e-4 straddles the kink, 1e-5 does not
    Tensor<double> w({1}, 5e-5);
    Tensor<double> analytic({1}, 1.0);
    auto loss = [&] { return std::max(w[0], 0.0); };
    std::vector<GradCheckTarget> t{{"w", w.data(), analytic.data()}};
    CHECK(grad_check(loss, t, 1e-4).max_relative_error > 0.1);
    const double steps[] = {1e-4, 1e-5};
    const GradCheckResult r = grad_check(loss, t, steps, 1e-5);
    CHECK(r.max_relative_error < 1e-9);
    CHECK(r.retried == 1);
    CHECK(w[0] == 5e-5);
    const double none[] = {1e-4, -1.0};
    CHECK_THROWS_AS(grad_check(loss, t, none, 1e-5), ArgumentError);
  }
}

TEST_CASE("every primitive passes gradient checks across seeds") {
  for (const auto& check : testing::all_layer_checks()) {
    for (std::uint64_t seed = 100; seed < 105; ++seed) {
      INFO(check.name << " seed " << seed);
      CHECK(check.run(seed) < 1e-4);
    }
  }
}
