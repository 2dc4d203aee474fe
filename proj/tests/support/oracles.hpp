#pragma once

// Independent reference implementations used only by tests. They are written
// as plain nested loops over scalar indices and share no code with the
// library kernels they check.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "avasd/core/prng.hpp"
#include "avasd/core/tensor.hpp"

namespace avasd::oracle {

inline Tensor<double> random_tensor(Shape shape, Prng& prng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = prng.uniform(lo, hi);
  return t;
}

// out[y,x,co] = bias[co] + sum_{i,j,ci} in_padded[y*sh+i, x*sw+j, ci] * k[i,j,ci,co]
inline Tensor<double> conv2d(const Tensor<double>& in, const Tensor<double>& k,
                             const Tensor<double>& bias, std::size_t sh, std::size_t sw,
                             std::size_t ph, std::size_t pw) {
  const long H = in.dim(0), W = in.dim(1), C = in.dim(2);
  const long KH = k.dim(0), KW = k.dim(1), CO = k.dim(3);
  const long OH = (H + 2 * (long)ph - KH) / (long)sh + 1;
  const long OW = (W + 2 * (long)pw - KW) / (long)sw + 1;
  Tensor<double> out({(std::size_t)OH, (std::size_t)OW, (std::size_t)CO});
  for (long y = 0; y < OH; ++y)
    for (long x = 0; x < OW; ++x)
      for (long co = 0; co < CO; ++co) {
        double s = bias(co);
        for (long i = 0; i < KH; ++i)
          for (long j = 0; j < KW; ++j)
            for (long ci = 0; ci < C; ++ci) {
              const long iy = y * (long)sh + i - (long)ph;
              const long ix = x * (long)sw + j - (long)pw;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              s += in(iy, ix, ci) * k(i, j, ci, co);
            }
        out(y, x, co) = s;
      }
  return out;
}

inline Tensor<double> conv3d(const Tensor<double>& in, const Tensor<double>& k,
                             const Tensor<double>& bias, const std::size_t stride[3],
                             const std::size_t pad[3]) {
  const long T = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
  const long KT = k.dim(0), KH = k.dim(1), KW = k.dim(2), CO = k.dim(4);
  const long OT = (T + 2 * (long)pad[0] - KT) / (long)stride[0] + 1;
  const long OH = (H + 2 * (long)pad[1] - KH) / (long)stride[1] + 1;
  const long OW = (W + 2 * (long)pad[2] - KW) / (long)stride[2] + 1;
  Tensor<double> out({(std::size_t)OT, (std::size_t)OH, (std::size_t)OW, (std::size_t)CO});
  for (long t = 0; t < OT; ++t)
    for (long y = 0; y < OH; ++y)
      for (long x = 0; x < OW; ++x)
        for (long co = 0; co < CO; ++co) {
          double s = bias(co);
          for (long a = 0; a < KT; ++a)
            for (long i = 0; i < KH; ++i)
              for (long j = 0; j < KW; ++j)
                for (long ci = 0; ci < C; ++ci) {
                  const long it = t * (long)stride[0] + a - (long)pad[0];
                  const long iy = y * (long)stride[1] + i - (long)pad[1];
                  const long ix = x * (long)stride[2] + j - (long)pad[2];
                  if (it < 0 || it >= T || iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                  s += in(it, iy, ix, ci) * k(a, i, j, ci, co);
                }
          out(t, y, x, co) = s;
        }
  return out;
}

inline Tensor<double> dense(const Tensor<double>& x, const Tensor<double>& w,
                            const Tensor<double>& b) {
  Tensor<double> out({x.dim(0), w.dim(1)});
  for (std::size_t n = 0; n < x.dim(0); ++n)
    for (std::size_t g = 0; g < w.dim(1); ++g) {
      double s = b(g);
      for (std::size_t f = 0; f < x.dim(1); ++f) s += x(n, f) * w(f, g);
      out(n, g) = s;
    }
  return out;
}

// Scalar GRU step straight from the gate equations; w is [F,3H], u is [H,3H].
inline std::vector<double> gru_step(const std::vector<double>& x, const std::vector<double>& h,
                                    const Tensor<double>& w, const Tensor<double>& u,
                                    const Tensor<double>& b) {
  const std::size_t H = h.size();
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> z(H), r(H), out(H);
  for (std::size_t j = 0; j < H; ++j) {
    double az = b(j), ar = b(H + j);
    for (std::size_t f = 0; f < x.size(); ++f) {
      az += x[f] * w(f, j);
      ar += x[f] * w(f, H + j);
    }
    for (std::size_t p = 0; p < H; ++p) {
      az += h[p] * u(p, j);
      ar += h[p] * u(p, H + j);
    }
    z[j] = sig(az);
    r[j] = sig(ar);
  }
  for (std::size_t j = 0; j < H; ++j) {
    double ac = b(2 * H + j);
    for (std::size_t f = 0; f < x.size(); ++f) ac += x[f] * w(f, 2 * H + j);
    for (std::size_t p = 0; p < H; ++p) ac += r[p] * h[p] * u(p, 2 * H + j);
    out[j] = (1.0 - z[j]) * h[j] + z[j] * std::tanh(ac);
  }
  return out;
}

// O(N^2) DFT power spectrum of a zero-padded real frame, bins 0..n/2.
inline std::vector<double> dft_power(const std::vector<double>& frame, std::size_t n_fft) {
  std::vector<double> out(n_fft / 2 + 1);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const double ang = -2.0 * std::numbers::pi * double(k) * double(n) / double(n_fft);
      acc += frame[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::norm(acc);
  }
  return out;
}

// P(s+ > s-) + 0.5 P(s+ == s-) over all positive/negative pairs.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace avasd::oracle
