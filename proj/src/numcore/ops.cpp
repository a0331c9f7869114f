// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/ops.hpp"

#include "segrobust/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace segrobust::ops {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_str(t.shape()));
  }
}

std::size_t conv_out_extent(std::size_t in, std::size_t k, ConvGeometry g) {
  if (g.stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (in + 2 * g.padding < k) throw ShapeError("conv2d: kernel larger than padded input");
  return (in + 2 * g.padding - k) / g.stride + 1;
}

struct ConvDims {
  std::size_t h, w, cin, k, cout, oh, ow;
};

ConvDims conv_dims(const Shape& input, const Shape& weight, ConvGeometry g) {
  if (input.size() != 3 || weight.size() != 4) {
    throw ShapeError("conv2d: expected (H,W,Cin) input and (K,K,Cin,Cout) weight, got " + shape_str(input) +
                     " and " + shape_str(weight));
  }
  if (weight[0] != weight[1] || weight[2] != input[2]) {
    throw ShapeError("conv2d: weight " + shape_str(weight) + " incompatible with input " + shape_str(input));
  }
  ConvDims d{input[0], input[1], input[2], weight[0], weight[3], 0, 0};
  d.oh = conv_out_extent(d.h, d.k, g);
  d.ow = conv_out_extent(d.w, d.k, g);
  return d;
}

void require_out_shape(const Tensor& grad_out, const ConvDims& d, const char* op) {
  if (grad_out.shape() != Shape{d.oh, d.ow, d.cout}) {
    throw ShapeError(std::string(op) + ": gradient shape " + shape_str(grad_out.shape()) + " does not match output");
  }
}

// Visits every (output pixel, kernel tap) pair that lands inside the input.
template <typename Fn>
void for_each_tap(const ConvDims& d, ConvGeometry g, Fn&& fn) {
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      const std::size_t out_base = (oy * d.ow + ox) * d.cout;
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                  static_cast<std::ptrdiff_t>(g.padding);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
          const std::size_t in_base = (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.cin;
          const std::size_t w_base = (ky * d.k + kx) * d.cin * d.cout;
          fn(out_base, in_base, w_base);
        }
      }
    }
  }
}

template <typename Fn>
Tensor map(const Tensor& x, Fn&& fn) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i]);
  return out;
}

template <typename Fn>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, Fn&& fn) {
  require_same_shape(a, b, op);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, ConvGeometry geom) {
  const ConvDims d = conv_dims(input.shape(), weight.shape(), geom);
  if (bias.rank() != 1 || bias.dim(0) != d.cout) {
    throw ShapeError("conv2d: bias " + shape_str(bias.shape()) + " does not match Cout " + std::to_string(d.cout));
  }
  Tensor out({d.oh, d.ow, d.cout});
  double* o = out.data().data();
  for (std::size_t p = 0; p < d.oh * d.ow; ++p) {
    std::copy(bias.data().begin(), bias.data().end(), o + p * d.cout);
  }
  const double* x = input.data().data();
  const double* w = weight.data().data();
  for_each_tap(d, geom, [&](std::size_t ob, std::size_t ib, std::size_t wb) {
    double* orow = o + ob;
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
      const double xv = x[ib + ci];
      const double* wrow = w + wb + ci * d.cout;
      for (std::size_t co = 0; co < d.cout; ++co) orow[co] += xv * wrow[co];
    }
  });
  return out;
}

Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& weight, const Shape& input_shape,
                         ConvGeometry geom) {
  const ConvDims d = conv_dims(input_shape, weight.shape(), geom);
  require_out_shape(grad_out, d, "conv2d_grad_input");
  Tensor gin(input_shape);
  double* gx = gin.data().data();
  const double* g = grad_out.data().data();
  const double* w = weight.data().data();
  for_each_tap(d, geom, [&](std::size_t ob, std::size_t ib, std::size_t wb) {
    const double* grow = g + ob;
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
      const double* wrow = w + wb + ci * d.cout;
      double acc = 0.0;
      for (std::size_t co = 0; co < d.cout; ++co) acc += grow[co] * wrow[co];
      gx[ib + ci] += acc;
    }
  });
  return gin;
}

Tensor conv2d_grad_weight(const Tensor& grad_out, const Tensor& input, const Shape& weight_shape,
                          ConvGeometry geom) {
  const ConvDims d = conv_dims(input.shape(), weight_shape, geom);
  require_out_shape(grad_out, d, "conv2d_grad_weight");
  Tensor gw(weight_shape);
  double* gwp = gw.data().data();
  const double* g = grad_out.data().data();
  const double* x = input.data().data();
  for_each_tap(d, geom, [&](std::size_t ob, std::size_t ib, std::size_t wb) {
    const double* grow = g + ob;
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
      const double xv = x[ib + ci];
      double* gwrow = gwp + wb + ci * d.cout;
      for (std::size_t co = 0; co < d.cout; ++co) gwrow[co] += xv * grow[co];
    }
  });
  return gw;
}

Tensor conv2d_grad_bias(const Tensor& grad_out) {
  require_rank(grad_out, 3, "conv2d_grad_bias");
  const std::size_t c = grad_out.dim(2);
  Tensor gb({c});
  for (std::size_t i = 0; i < grad_out.size(); ++i) gb[i % c] += grad_out[i];
  return gb;
}

Tensor relu(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor relu_grad(const Tensor& grad_out, const Tensor& x) {
  return zip(grad_out, x, "relu_grad", [](double g, double v) { return v > 0.0 ? g : 0.0; });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  require_rank(x, 3, "upsample_nearest");
  if (factor == 0) throw ShapeError("upsample_nearest: factor must be positive");
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  Tensor out({h * factor, w * factor, c});
  for (std::size_t y = 0; y < h * factor; ++y) {
    for (std::size_t xx = 0; xx < w * factor; ++xx) {
      const double* src = x.data().data() + ((y / factor) * w + xx / factor) * c;
      std::copy(src, src + c, out.data().data() + (y * w * factor + xx) * c);
    }
  }
  return out;
}

Tensor upsample_nearest_grad(const Tensor& grad_out, std::size_t factor) {
  require_rank(grad_out, 3, "upsample_nearest_grad");
  if (factor == 0 || grad_out.dim(0) % factor || grad_out.dim(1) % factor) {
    throw ShapeError("upsample_nearest_grad: extent not divisible by factor");
  }
  const std::size_t oh = grad_out.dim(0), ow = grad_out.dim(1), c = grad_out.dim(2);
  const std::size_t w = ow / factor;
  Tensor gin({oh / factor, w, c});
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t xx = 0; xx < ow; ++xx) {
      const double* src = grad_out.data().data() + (y * ow + xx) * c;
      double* dst = gin.data().data() + ((y / factor) * w + xx / factor) * c;
      for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
    }
  }
  return gin;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1)) {
    throw ShapeError("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t pixels = a.dim(0) * a.dim(1), ca = a.dim(2), cb = b.dim(2);
  Tensor out({a.dim(0), a.dim(1), ca + cb});
  for (std::size_t p = 0; p < pixels; ++p) {
    double* dst = out.data().data() + p * (ca + cb);
    std::copy_n(a.data().data() + p * ca, ca, dst);
    std::copy_n(b.data().data() + p * cb, cb, dst + ca);
  }
  return out;
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 3, "slice_channels");
  const std::size_t c = x.dim(2);
  if (begin + count > c) throw ShapeError("slice_channels: range exceeds channel count");
  const std::size_t pixels = x.dim(0) * x.dim(1);
  Tensor out({x.dim(0), x.dim(1), count});
  for (std::size_t p = 0; p < pixels; ++p) {
    std::copy_n(x.data().data() + p * c + begin, count, out.data().data() + p * count);
  }
  return out;
}

Tensor softmax_channels(const Tensor& logits) {
  if (logits.rank() == 0) throw ShapeError("softmax_channels: scalar input");
  const std::size_t c = logits.shape().back();
  Tensor out(logits.shape());
  for (std::size_t base = 0; base < logits.size(); base += c) {
    double m = logits[base];
    for (std::size_t k = 1; k < c; ++k) m = std::max(m, logits[base + k]);
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      out[base + k] = std::exp(logits[base + k] - m);
      s += out[base + k];
    }
    for (std::size_t k = 0; k < c; ++k) out[base + k] /= s;
  }
  return out;
}

Tensor softmax_channels_grad(const Tensor& grad_out, const Tensor& probs) {
  require_same_shape(grad_out, probs, "softmax_channels_grad");
  const std::size_t c = probs.shape().back();
  Tensor gin(probs.shape());
  for (std::size_t base = 0; base < probs.size(); base += c) {
    double inner = 0.0;
    for (std::size_t k = 0; k < c; ++k) inner += grad_out[base + k] * probs[base + k];
    for (std::size_t k = 0; k < c; ++k) gin[base + k] = probs[base + k] * (grad_out[base + k] - inner);
  }
  return gin;
}

Tensor log_clamped(const Tensor& x) {
  return map(x, [](double v) { return std::log(std::max(v, kLogFloor)); });
}

Tensor log_clamped_grad(const Tensor& grad_out, const Tensor& x) {
  return zip(grad_out, x, "log_clamped_grad", [](double g, double v) { return v > kLogFloor ? g / v : 0.0; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return Tensor::scalar(s);
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of empty tensor");
  return Tensor::scalar(sum(x).item() / static_cast<double>(x.size()));
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double u, double v) { return u + v; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", [](double u, double v) { return u - v; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, "mul", [](double u, double v) { return u * v; });
}
Tensor div(const Tensor& a, const Tensor& b) {
  return zip(a, b, "div", [](double u, double v) { return u / v; });
}
Tensor scale(const Tensor& x, double factor) {
  return map(x, [factor](double v) { return v * factor; });
}
Tensor shift(const Tensor& x, double offset) {
  return map(x, [offset](double v) { return v + offset; });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: size mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return Tensor::scalar(s);
}

Tensor l2_norm(const Tensor& x) { return Tensor::scalar(std::sqrt(dot(x, x).item())); }

Tensor sign(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return map(x, [lo, hi](double v) { return std::clamp(v, lo, hi); });
}

Tensor clamp(const Tensor& x, const Tensor& lo, const Tensor& hi) {
  require_same_shape(x, lo, "clamp");
  require_same_shape(x, hi, "clamp");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
  return out;
}

}  // namespace segrobust::ops
