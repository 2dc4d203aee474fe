#include <string>

#include "avasd/core/ops.hpp"

namespace avasd {
namespace {

struct ConvGeometry {
  std::size_t n, t, h, w, cin;
  std::size_t kt, kh, kw, cout;
  std::size_t ot, oh, ow;
  Stride3 stride;
  Pad3 pad;
  bool batched;

  std::size_t in_index(std::size_t b, std::size_t it, std::size_t iy, std::size_t ix) const {
    return (((b * t + it) * h + iy) * w + ix) * cin;
  }
  std::size_t kernel_index(std::size_t i, std::size_t j, std::size_t k) const {
    return ((i * kh + j) * kw + k) * cin * cout;
  }
  Shape output_shape() const {
    if (batched) return {n, ot, oh, ow, cout};
    return {ot, oh, ow, cout};
  }
};

std::size_t out_extent(const char* axis, std::size_t in, std::size_t k, std::size_t s,
                       std::size_t p) {
  if (s == 0) throw ShapeError(std::string("conv stride along ") + axis + " must be positive");
  if (k > in + 2 * p) {
    throw ShapeError(std::string("conv kernel extent along ") + axis + " (" + std::to_string(k) +
                     ") exceeds padded input (" + std::to_string(in + 2 * p) + ")");
  }
  return (in + 2 * p - k) / s + 1;
}

ConvGeometry make_geometry(const Shape& in, const Shape& kernel, Stride3 stride, Pad3 pad) {
  ConvGeometry g{};
  if (in.size() == 5) {
    g.batched = true;
    g.n = in[0];
    g.t = in[1];
    g.h = in[2];
    g.w = in[3];
    g.cin = in[4];
  } else if (in.size() == 4) {
    g.batched = false;
    g.n = 1;
    g.t = in[0];
    g.h = in[1];
    g.w = in[2];
    g.cin = in[3];
  } else {
    throw ShapeError("conv3d input must be [N,T,H,W,C] or [T,H,W,C], got " +
                     shape_to_string(in));
  }
  if (kernel.size() != 5) {
    throw ShapeError("conv3d kernel must be [kt,kh,kw,Cin,Cout], got " + shape_to_string(kernel));
  }
  g.kt = kernel[0];
  g.kh = kernel[1];
  g.kw = kernel[2];
  if (kernel[3] != g.cin) {
    throw ShapeError("conv input channels: kernel expects Cin=" + std::to_string(kernel[3]) +
                     ", input has " + std::to_string(g.cin));
  }
  g.cout = kernel[4];
  g.ot = out_extent("T", g.t, g.kt, stride.t, pad.t);
  g.oh = out_extent("H", g.h, g.kh, stride.h, pad.h);
  g.ow = out_extent("W", g.w, g.kw, stride.w, pad.w);
  g.stride = stride;
  g.pad = pad;
  return g;
}

// Maps output coordinate o and tap i to the unpadded input coordinate;
// returns false when the tap lands in zero padding.
inline bool source(std::size_t o, std::size_t i, std::size_t s, std::size_t p, std::size_t extent,
                   std::size_t& out) {
  const std::size_t padded = o * s + i;
  if (padded < p) return false;
  out = padded - p;
  return out < extent;
}

}  // namespace

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Stride3 stride, Pad3 pad) {
  const ConvGeometry g = make_geometry(input.shape(), kernel.shape(), stride, pad);
  if (bias.rank() != 1 || bias.dim(0) != g.cout) {
    throw ShapeError("conv bias must be [Cout=" + std::to_string(g.cout) + "], got " +
                     shape_to_string(bias.shape()));
  }
  Tensor<T> out(g.output_shape());
  const T* in = input.data().data();
  const T* ker = kernel.data().data();
  const T* b = bias.data().data();
  T* o = out.data().data();

  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t ot = 0; ot < g.ot; ++ot)
      for (std::size_t oy = 0; oy < g.oh; ++oy)
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
          T* acc = o + (((n * g.ot + ot) * g.oh + oy) * g.ow + ox) * g.cout;
          for (std::size_t co = 0; co < g.cout; ++co) acc[co] = b[co];
          for (std::size_t i = 0; i < g.kt; ++i) {
            std::size_t it;
            if (!source(ot, i, stride.t, pad.t, g.t, it)) continue;
            for (std::size_t j = 0; j < g.kh; ++j) {
              std::size_t iy;
              if (!source(oy, j, stride.h, pad.h, g.h, iy)) continue;
              for (std::size_t k = 0; k < g.kw; ++k) {
                std::size_t ix;
                if (!source(ox, k, stride.w, pad.w, g.w, ix)) continue;
                const T* px = in + g.in_index(n, it, iy, ix);
                const T* wk = ker + g.kernel_index(i, j, k);
                for (std::size_t ci = 0; ci < g.cin; ++ci) {
                  const T v = px[ci];
                  const T* wrow = wk + ci * g.cout;
                  for (std::size_t co = 0; co < g.cout; ++co) acc[co] += v * wrow[co];
                }
              }
            }
          }
        }
  return out;
}

template <typename T>
ConvGrads<T> conv3d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                             const Tensor<T>& grad_output, Stride3 stride, Pad3 pad) {
  const ConvGeometry g = make_geometry(input.shape(), kernel.shape(), stride, pad);
  if (grad_output.shape() != g.output_shape()) {
    throw ShapeError("conv grad_output shape " + shape_to_string(grad_output.shape()) +
                     " does not match forward output " + shape_to_string(g.output_shape()));
  }
  ConvGrads<T> grads{Tensor<T>::zeros_like(input), Tensor<T>::zeros_like(kernel),
                     Tensor<T>({g.cout})};
  const T* in = input.data().data();
  const T* ker = kernel.data().data();
  const T* go = grad_output.data().data();
  T* gin = grads.input.data().data();
  T* gker = grads.kernel.data().data();
  T* gb = grads.bias.data().data();

  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t ot = 0; ot < g.ot; ++ot)
      for (std::size_t oy = 0; oy < g.oh; ++oy)
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
          const T* gout = go + (((n * g.ot + ot) * g.oh + oy) * g.ow + ox) * g.cout;
          for (std::size_t co = 0; co < g.cout; ++co) gb[co] += gout[co];
          for (std::size_t i = 0; i < g.kt; ++i) {
            std::size_t it;
            if (!source(ot, i, stride.t, pad.t, g.t, it)) continue;
            for (std::size_t j = 0; j < g.kh; ++j) {
              std::size_t iy;
              if (!source(oy, j, stride.h, pad.h, g.h, iy)) continue;
              for (std::size_t k = 0; k < g.kw; ++k) {
                std::size_t ix;
                if (!source(ox, k, stride.w, pad.w, g.w, ix)) continue;
                const std::size_t in_off = g.in_index(n, it, iy, ix);
                const std::size_t k_off = g.kernel_index(i, j, k);
                for (std::size_t ci = 0; ci < g.cin; ++ci) {
                  const T v = in[in_off + ci];
                  const T* wrow = ker + k_off + ci * g.cout;
                  T* gwrow = gker + k_off + ci * g.cout;
                  T dot = T{0};
                  for (std::size_t co = 0; co < g.cout; ++co) {
                    gwrow[co] += v * gout[co];
                    dot += wrow[co] * gout[co];
                  }
                  gin[in_off + ci] += dot;
                }
              }
            }
          }
        }
  return grads;
}

namespace {

// Lifts a 2-D problem onto the 3-D kernel with a unit temporal axis.
Shape lift_input(const Shape& s) {
  if (s.size() == 4) return {s[0], 1, s[1], s[2], s[3]};
  if (s.size() == 3) return {1, s[0], s[1], s[2]};
  throw ShapeError("conv2d input must be [N,H,W,C] or [H,W,C], got " + shape_to_string(s));
}

Shape lift_kernel(const Shape& s) {
  if (s.size() != 4) {
    throw ShapeError("conv2d kernel must be [kh,kw,Cin,Cout], got " + shape_to_string(s));
  }
  return {1, s[0], s[1], s[2], s[3]};
}

Shape drop_temporal(const Shape& lifted_out, bool batched) {
  if (batched) return {lifted_out[0], lifted_out[2], lifted_out[3], lifted_out[4]};
  return {lifted_out[1], lifted_out[2], lifted_out[3]};
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Stride2 stride, Pad2 pad) {
  const bool batched = input.rank() == 4;
  Tensor<T> out = conv3d(input.reshaped(lift_input(input.shape())),
                         kernel.reshaped(lift_kernel(kernel.shape())), bias,
                         Stride3{1, stride.h, stride.w}, Pad3{0, pad.h, pad.w});
  Shape s = drop_temporal(out.shape(), batched);
  return std::move(out).reshaped(std::move(s));
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                             const Tensor<T>& grad_output, Stride2 stride, Pad2 pad) {
  const bool batched = input.rank() == 4;
  const Shape& go = grad_output.shape();
  Shape lifted_go = batched && go.size() == 4 ? Shape{go[0], 1, go[1], go[2], go[3]}
                    : go.size() == 3          ? Shape{1, go[0], go[1], go[2]}
                                              : go;
  ConvGrads<T> g = conv3d_backward(input.reshaped(lift_input(input.shape())),
                                   kernel.reshaped(lift_kernel(kernel.shape())),
                                   grad_output.reshaped(lifted_go),
                                   Stride3{1, stride.h, stride.w}, Pad3{0, pad.h, pad.w});
  g.input.reshape(input.shape());
  g.kernel.reshape(kernel.shape());
  return g;
}

#define AVASD_INSTANTIATE_CONV(T)                                                             \
  template Tensor<T> conv3d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Stride3,    \
                            Pad3);                                                            \
  template ConvGrads<T> conv3d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                        Stride3, Pad3);                                       \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Stride2,    \
                            Pad2);                                                            \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                        Stride2, Pad2);

AVASD_INSTANTIATE_CONV(float)
AVASD_INSTANTIATE_CONV(double)

}  // namespace avasd
