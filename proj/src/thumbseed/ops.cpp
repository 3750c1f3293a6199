// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "thumbseed/linalg.hpp"

namespace thumbseed {

namespace debug {
namespace {
std::string g_fault_op;
double g_fault_scale = 1.0;
}  // namespace

void set_backward_fault(std::string_view op, double scale) {
  g_fault_op = std::string(op);
  g_fault_scale = scale;
}
const std::string& backward_fault_op() { return g_fault_op; }
double backward_fault_scale() { return g_fault_scale; }

namespace {
thread_local ActivationProbe* t_probe = nullptr;
}  // namespace
void set_activation_probe(ActivationProbe* probe) { t_probe = probe; }
ActivationProbe* activation_probe() { return t_probe; }
}  // namespace debug

namespace {

template <typename T>
T sigmoid_scalar(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

struct ConvGeom {
  std::size_t h, w, cin, kh, kw, cout, stride, oh, ow, pad_top, pad_left;
  std::size_t kdim() const { return kh * kw * cin; }
  std::size_t positions() const { return oh * ow; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1; }
};

ConvGeom conv_geometry(const Shape& x, const Shape& k, const Shape& b, std::size_t stride,
                       Padding padding) {
  require(x.size() == 3, "conv2d: input must be H x W x C, got " + shape_str(x));
  require(k.size() == 4, "conv2d: kernel must be kh x kw x Cin x Cout, got " + shape_str(k));
  require(k[2] == x[2], "conv2d: kernel depth " + std::to_string(k[2]) +
                            " does not match input channels " + std::to_string(x[2]));
  require(b.size() == 1 && b[0] == k[3], "conv2d: bias must have Cout entries");
  require(stride >= 1, "conv2d: stride must be >= 1");
  ConvGeom g{x[0], x[1], x[2], k[0], k[1], k[3], stride, 0, 0, 0, 0};
  if (padding == Padding::Same) {
    g.oh = (g.h + stride - 1) / stride;
    g.ow = (g.w + stride - 1) / stride;
    const std::size_t need_h = (g.oh - 1) * stride + g.kh;
    const std::size_t need_w = (g.ow - 1) * stride + g.kw;
    g.pad_top = need_h > g.h ? (need_h - g.h) / 2 : 0;
    g.pad_left = need_w > g.w ? (need_w - g.w) / 2 : 0;
  } else {
    require(g.h >= g.kh && g.w >= g.kw, "conv2d: kernel larger than input with valid padding");
    g.oh = (g.h - g.kh) / stride + 1;
    g.ow = (g.w - g.kw) / stride + 1;
  }
  return g;
}

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
  const std::size_t kdim = g.kdim();
  for (std::size_t oy = 0; oy < g.oh; ++oy) {
    for (std::size_t ox = 0; ox < g.ow; ++ox) {
      T* row = cols + (oy * g.ow + ox) * kdim;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                        static_cast<std::ptrdiff_t>(g.pad_top);
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                          static_cast<std::ptrdiff_t>(g.pad_left);
          T* dst = row + (ky * g.kw + kx) * g.cin;
          if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.h) ||
              ix >= static_cast<std::ptrdiff_t>(g.w)) {
            std::fill(dst, dst + g.cin, T{0});
          } else {
            const T* src = x + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) * g.cin;
            std::copy(src, src + g.cin, dst);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, T* dx) {
  const std::size_t kdim = g.kdim();
  for (std::size_t oy = 0; oy < g.oh; ++oy) {
    for (std::size_t ox = 0; ox < g.ow; ++ox) {
      const T* row = cols + (oy * g.ow + ox) * kdim;
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                        static_cast<std::ptrdiff_t>(g.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                          static_cast<std::ptrdiff_t>(g.pad_left);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
          const T* src = row + (ky * g.kw + kx) * g.cin;
          T* dst = dx + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) * g.cin;
          for (std::size_t c = 0; c < g.cin; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <typename T>
BasicTensor<T> conv_apply(const T* cols, const ConvGeom& g, const BasicTensor<T>& kernel,
                          const BasicTensor<T>& bias) {
  BasicTensor<T> out(Shape{g.oh, g.ow, g.cout});
  T* o = out.ptr();
  for (std::size_t p = 0; p < g.positions(); ++p) {
    std::copy(bias.ptr(), bias.ptr() + g.cout, o + p * g.cout);
  }
  linalg::gemm<T>(false, false, g.positions(), g.cout, g.kdim(), T{1}, cols, kernel.ptr(), T{1}, o);
  return out;
}

template <typename T>
void require_same_shape(Var<T> a, Var<T> b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                              const BasicTensor<T>& bias, std::size_t stride, Padding padding) {
  const ConvGeom g = conv_geometry(input.shape(), kernel.shape(), bias.shape(), stride, padding);
  if (g.pointwise()) return conv_apply(input.ptr(), g, kernel, bias);
  std::vector<T> cols(g.positions() * g.kdim());
  im2col(input.ptr(), g, cols.data());
  return conv_apply(cols.data(), g, kernel, bias);
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  require(!logits.empty(), "softmax: empty input");
  const T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  T total{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

namespace {

// Gate nonlinearities in place over one 4H pre-activation row, then the
// cell/hidden update. Shared by lstm_step and lstm_scan.
template <typename T>
void lstm_cell(T* gates, const T* c_prev, std::size_t hidden, T* c_out, T* tanh_c, T* h_out) {
  T* i = gates;
  T* f = gates + hidden;
  T* g = gates + 2 * hidden;
  T* o = gates + 3 * hidden;
  for (std::size_t j = 0; j < hidden; ++j) {
    i[j] = sigmoid_scalar(i[j]);
    f[j] = sigmoid_scalar(f[j]);
    g[j] = std::tanh(g[j]);
    o[j] = sigmoid_scalar(o[j]);
    c_out[j] = f[j] * c_prev[j] + i[j] * g[j];
    tanh_c[j] = std::tanh(c_out[j]);
    h_out[j] = o[j] * tanh_c[j];
  }
}

template <typename T>
std::size_t check_lstm_weights(std::size_t in, const BasicTensor<T>& wx, const BasicTensor<T>& wh,
                               const BasicTensor<T>& b) {
  require(wx.rank() == 2 && wx.dim(1) % 4 == 0, "lstm: wx must be In x 4H");
  const std::size_t hidden = wx.dim(1) / 4;
  require(wx.dim(0) == in, "lstm: input size " + std::to_string(in) +
                               " does not match wx rows " + std::to_string(wx.dim(0)));
  require(wh.shape() == Shape{hidden, 4 * hidden}, "lstm: wh must be H x 4H");
  require(b.shape() == Shape{4 * hidden}, "lstm: bias must have 4H entries");
  return hidden;
}

}  // namespace

template <typename T>
LstmState<T> lstm_step(std::span<const T> x, std::span<const T> h_prev, std::span<const T> c_prev,
                       const BasicTensor<T>& wx, const BasicTensor<T>& wh,
                       const BasicTensor<T>& b) {
  const std::size_t hidden = check_lstm_weights(x.size(), wx, wh, b);
  require(h_prev.size() == hidden && c_prev.size() == hidden,
          "lstm_step: state size does not match hidden size " + std::to_string(hidden));
  std::vector<T> gates(b.data().begin(), b.data().end());
  linalg::gemm<T>(false, false, 1, 4 * hidden, x.size(), T{1}, x.data(), wx.ptr(), T{1},
                  gates.data());
  linalg::gemm<T>(false, false, 1, 4 * hidden, hidden, T{1}, h_prev.data(), wh.ptr(), T{1},
                  gates.data());
  LstmState<T> out{std::vector<T>(hidden), std::vector<T>(hidden)};
  std::vector<T> tanh_c(hidden);
  lstm_cell(gates.data(), c_prev.data(), hidden, out.c.data(), tanh_c.data(), out.h.data());
  return out;
}

Tensor bilinear_resize(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  require(image.rank() == 3, "bilinear_resize: image must be H x W x C");
  require(out_h >= 1 && out_w >= 1, "bilinear_resize: target size must be positive");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  require(h >= 1 && w >= 1, "bilinear_resize: empty image");
  Tensor out(Shape{out_h, out_w, c});
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(w - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1.0 - wx) * image.at(y0, x0, ch) + wx * image.at(y0, x1, ch);
        const double bot = (1.0 - wx) * image.at(y1, x0, ch) + wx * image.at(y1, x1, ch);
        out.at(oy, ox, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

namespace ops {

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "add");
  BasicTensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, "add", [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    for (int id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      auto& gx = t.grad_accum(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "mul");
  BasicTensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, "mul", [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    const auto& av = t.value(ia);
    const auto& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      auto& gx = t.grad_accum(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      auto& gx = t.grad_accum(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v *= s;
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "scale", [ia, s](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    auto& gx = t.grad_accum(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  T total{0};
  for (T v : a.value().data()) total += v;
  const int ia = a.id;
  return a.tape->record(BasicTensor<T>::scalar(total), {a}, "sum", [ia](Tape<T>& t, int self) {
    const T g = t.upstream(self)[0];
    auto& gx = t.grad_accum(ia);
    for (auto& v : gx.data()) v += g;
  });
}

template <typename T>
Var<T> relu(Var<T> a) {
  BasicTensor<T> out = a.value();
  if (auto* probe = debug::activation_probe()) {
    const std::size_t first = probe->recorded.size();
    if (probe->replay && probe->replay->size() < first + out.size()) {
      throw ContractViolation("relu: replayed activation pattern is too short");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      probe->recorded.push_back(out[i] > T{0});
      const bool on = probe->replay ? (*probe->replay)[first + i] : out[i] > T{0};
      if (!on) out[i] = T{0};
    }
  } else {
    for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  }
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "relu", [ia](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    const auto& x = t.value(ia);
    auto& gx = t.grad_accum(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > T{0}) gx[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v = sigmoid_scalar(v);
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "sigmoid", [ia](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    const auto& y = t.value(self);
    auto& gx = t.grad_accum(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v = std::tanh(v);
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "tanh", [ia](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    const auto& y = t.value(self);
    auto& gx = t.grad_accum(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T{1} - y[i] * y[i]);
  });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  BasicTensor<T> out = a.value().reshaped(std::move(shape));
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "reshape", [ia](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    auto& gx = t.grad_accum(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <typename T>
Var<T> slice(Var<T> a, std::size_t offset, Shape shape) {
  const std::size_t count = numel(shape);
  require(offset + count <= a.size(), "slice: range [" + std::to_string(offset) + ", " +
                                          std::to_string(offset + count) + ") exceeds " +
                                          shape_str(a.shape()));
  const auto src = a.value().data().subspan(offset, count);
  BasicTensor<T> out(std::move(shape), std::vector<T>(src.begin(), src.end()));
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "slice", [ia, offset](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    auto& gx = t.grad_accum(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[offset + i] += g[i];
  });
}

template <typename T>
Var<T> concat_last(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  require(!sa.empty() && sa.size() == sb.size() &&
              std::equal(sa.begin(), sa.end() - 1, sb.begin()),
          "concat_last: leading axes differ " + shape_str(sa) + " vs " + shape_str(sb));
  const std::size_t ca = sa.back(), cb = sb.back(), rows = a.size() / std::max<std::size_t>(ca, 1);
  Shape so = sa;
  so.back() = ca + cb;
  BasicTensor<T> out(so);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.ptr() + r * ca, ca, out.ptr() + r * (ca + cb));
    std::copy_n(bv.ptr() + r * cb, cb, out.ptr() + r * (ca + cb) + ca);
  }
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, "concat_last",
                        [ia, ib, ca, cb, rows](Tape<T>& t, int self) {
                          const auto& g = t.upstream(self);
                          if (t.requires_grad(ia)) {
                            auto& gx = t.grad_accum(ia);
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < ca; ++c)
                                gx[r * ca + c] += g[r * (ca + cb) + c];
                          }
                          if (t.requires_grad(ib)) {
                            auto& gx = t.grad_accum(ib);
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < cb; ++c)
                                gx[r * cb + c] += g[r * (ca + cb) + ca + c];
                          }
                        });
}

template <typename T>
Var<T> transpose01(Var<T> a) {
  require(a.shape().size() == 3, "transpose01: rank-3 input required");
  const std::size_t d0 = a.shape()[0], d1 = a.shape()[1], d2 = a.shape()[2];
  BasicTensor<T> out(Shape{d1, d0, d2});
  const auto& av = a.value();
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      std::copy_n(av.ptr() + (i * d1 + j) * d2, d2, out.ptr() + (j * d0 + i) * d2);
  const int ia = a.id;
  return a.tape->record(std::move(out), {a}, "transpose01",
                        [ia, d0, d1, d2](Tape<T>& t, int self) {
                          const auto& g = t.upstream(self);
                          auto& gx = t.grad_accum(ia);
                          for (std::size_t i = 0; i < d0; ++i)
                            for (std::size_t j = 0; j < d1; ++j)
                              for (std::size_t c = 0; c < d2; ++c)
                                gx[(i * d1 + j) * d2 + c] += g[(j * d0 + i) * d2 + c];
                        });
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[1] == b.shape()[0],
          "matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  BasicTensor<T> out(Shape{m, n});
  linalg::gemm<T>(false, false, m, n, k, T{1}, a.value().ptr(), b.value().ptr(), T{0}, out.ptr());
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {a, b}, "matmul", [ia, ib, m, k, n](Tape<T>& t, int self) {
    const auto& g = t.upstream(self);
    if (t.requires_grad(ia)) {
      linalg::gemm<T>(false, true, m, k, n, T{1}, g.ptr(), t.value(ib).ptr(), T{1},
                      t.grad_accum(ia).ptr());
    }
    if (t.requires_grad(ib)) {
      linalg::gemm<T>(true, false, k, n, m, T{1}, t.value(ia).ptr(), g.ptr(), T{1},
                      t.grad_accum(ib).ptr());
    }
  });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  require(x.shape().size() == 2 && w.shape().size() == 2 && x.shape()[1] == w.shape()[0],
          "linear: incompatible shapes " + shape_str(x.shape()) + " and " + shape_str(w.shape()));
  const std::size_t n = x.shape()[0], in = x.shape()[1], outd = w.shape()[1];
  require(b.shape() == Shape{outd}, "linear: bias must have " + std::to_string(outd) + " entries");
  BasicTensor<T> out(Shape{n, outd});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(b.value().ptr(), outd, out.ptr() + r * outd);
  linalg::gemm<T>(false, false, n, outd, in, T{1}, x.value().ptr(), w.value().ptr(), T{1},
                  out.ptr());
  const int ix = x.id, iw = w.id, ib = b.id;
  return x.tape->record(std::move(out), {x, w, b}, "linear",
                        [ix, iw, ib, n, in, outd](Tape<T>& t, int self) {
                          const auto& g = t.upstream(self);
                          if (t.requires_grad(ix)) {
                            linalg::gemm<T>(false, true, n, in, outd, T{1}, g.ptr(),
                                            t.value(iw).ptr(), T{1}, t.grad_accum(ix).ptr());
                          }
                          if (t.requires_grad(iw)) {
                            linalg::gemm<T>(true, false, in, outd, n, T{1}, t.value(ix).ptr(),
                                            g.ptr(), T{1}, t.grad_accum(iw).ptr());
                          }
                          if (t.requires_grad(ib)) {
                            auto& gb = t.grad_accum(ib);
                            for (std::size_t r = 0; r < n; ++r)
                              for (std::size_t c = 0; c < outd; ++c) gb[c] += g[r * outd + c];
                          }
                        });
}

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride, Padding padding) {
  const ConvGeom g = conv_geometry(input.shape(), kernel.shape(), bias.shape(), stride, padding);
  std::shared_ptr<std::vector<T>> cols;
  BasicTensor<T> out;
  if (g.pointwise()) {
    out = conv_apply(input.value().ptr(), g, kernel.value(), bias.value());
  } else {
    cols = std::make_shared<std::vector<T>>(g.positions() * g.kdim());
    im2col(input.value().ptr(), g, cols->data());
    out = conv_apply(cols->data(), g, kernel.value(), bias.value());
  }
  const int ix = input.id, ik = kernel.id, ib = bias.id;
  return input.tape->record(
      std::move(out), {input, kernel, bias}, "conv2d", [ix, ik, ib, g, cols](Tape<T>& t, int self) {
        const auto& go = t.upstream(self);
        const std::size_t p = g.positions(), kd = g.kdim();
        const T* colp = cols ? cols->data() : t.value(ix).ptr();
        if (t.requires_grad(ik)) {
          linalg::gemm<T>(true, false, kd, g.cout, p, T{1}, colp, go.ptr(), T{1},
                          t.grad_accum(ik).ptr());
        }
        if (t.requires_grad(ib)) {
          auto& gb = t.grad_accum(ib);
          for (std::size_t i = 0; i < p; ++i)
            for (std::size_t c = 0; c < g.cout; ++c) gb[c] += go[i * g.cout + c];
        }
        if (t.requires_grad(ix)) {
          auto& gx = t.grad_accum(ix);
          if (g.pointwise()) {
            linalg::gemm<T>(false, true, p, kd, g.cout, T{1}, go.ptr(), t.value(ik).ptr(), T{1},
                            gx.ptr());
          } else {
            std::vector<T> dcols(p * kd);
            linalg::gemm<T>(false, true, p, kd, g.cout, T{1}, go.ptr(), t.value(ik).ptr(), T{0},
                            dcols.data());
            col2im_add(dcols.data(), g, gx.ptr());
          }
        }
      });
}

template <typename T>
Var<T> avg_pool2(Var<T> input) {
  const Shape& s = input.shape();
  require(s.size() == 3, "avg_pool2: input must be H x W x C");
  require(s[0] % 2 == 0 && s[1] % 2 == 0,
          "avg_pool2: spatial dims must be even, got " + shape_str(s));
  const std::size_t oh = s[0] / 2, ow = s[1] / 2, c = s[2];
  BasicTensor<T> out(Shape{oh, ow, c});
  const auto& x = input.value();
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t xx = 0; xx < ow; ++xx)
      for (std::size_t ch = 0; ch < c; ++ch)
        out.at(y, xx, ch) = T(0.25) * (x.at(2 * y, 2 * xx, ch) + x.at(2 * y, 2 * xx + 1, ch) +
                                       x.at(2 * y + 1, 2 * xx, ch) +
                                       x.at(2 * y + 1, 2 * xx + 1, ch));
  const int ix = input.id;
  return input.tape->record(std::move(out), {input}, "avg_pool2",
                            [ix, oh, ow, c](Tape<T>& t, int self) {
                              const auto& g = t.upstream(self);
                              auto& gx = t.grad_accum(ix);
                              for (std::size_t y = 0; y < oh; ++y)
                                for (std::size_t xx = 0; xx < ow; ++xx)
                                  for (std::size_t ch = 0; ch < c; ++ch) {
                                    const T v = T(0.25) * g.at(y, xx, ch);
                                    gx.at(2 * y, 2 * xx, ch) += v;
                                    gx.at(2 * y, 2 * xx + 1, ch) += v;
                                    gx.at(2 * y + 1, 2 * xx, ch) += v;
                                    gx.at(2 * y + 1, 2 * xx + 1, ch) += v;
                                  }
                            });
}

template <typename T>
Var<T> softmax_rows(Var<T> logits) {
  const Shape& s = logits.shape();
  require(s.size() == 2 && s[1] > 0, "softmax_rows: rank-2 input with nonempty rows required");
  const std::size_t rows = s[0], cols = s[1];
  BasicTensor<T> out(s);
  const auto& z = logits.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = softmax<T>(z.data().subspan(r * cols, cols));
    std::copy(row.begin(), row.end(), out.ptr() + r * cols);
  }
  const int iz = logits.id;
  return logits.tape->record(std::move(out), {logits}, "softmax_rows",
                             [iz, rows, cols](Tape<T>& t, int self) {
                               const auto& g = t.upstream(self);
                               const auto& y = t.value(self);
                               auto& gx = t.grad_accum(iz);
                               for (std::size_t r = 0; r < rows; ++r) {
                                 T dot{0};
                                 for (std::size_t c = 0; c < cols; ++c)
                                   dot += g[r * cols + c] * y[r * cols + c];
                                 for (std::size_t c = 0; c < cols; ++c)
                                   gx[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
                               }
                             });
}

template <typename T>
Var<T> lstm_scan(Var<T> x, Var<T> wx, Var<T> wh, Var<T> b, bool reverse) {
  const Shape& s = x.shape();
  require(s.size() == 3, "lstm_scan: input must be N x T x In, got " + shape_str(s));
  const std::size_t n = s[0], steps = s[1], in = s[2];
  const std::size_t hidden = check_lstm_weights(in, wx.value(), wh.value(), b.value());
  const std::size_t g4 = 4 * hidden;

  // Per-step caches, indexed by scan order.
  auto xs = std::make_shared<std::vector<T>>(steps * n * in);
  auto gates = std::make_shared<std::vector<T>>(steps * n * g4);
  auto cells = std::make_shared<std::vector<T>>(steps * n * hidden);
  auto tanh_cells = std::make_shared<std::vector<T>>(steps * n * hidden);
  auto hiddens = std::make_shared<std::vector<T>>(steps * n * hidden);

  BasicTensor<T> out(Shape{n, steps, hidden});
  const auto& xv = x.value();
  std::vector<T> zeros(n * hidden, T{0});
  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t t = reverse ? steps - 1 - step : step;
    T* xt = xs->data() + step * n * in;
    for (std::size_t r = 0; r < n; ++r) std::copy_n(xv.ptr() + (r * steps + t) * in, in, xt + r * in);
    T* a = gates->data() + step * n * g4;
    for (std::size_t r = 0; r < n; ++r) std::copy_n(b.value().ptr(), g4, a + r * g4);
    linalg::gemm<T>(false, false, n, g4, in, T{1}, xt, wx.value().ptr(), T{1}, a);
    const T* h_prev = step ? hiddens->data() + (step - 1) * n * hidden : zeros.data();
    const T* c_prev = step ? cells->data() + (step - 1) * n * hidden : zeros.data();
    linalg::gemm<T>(false, false, n, g4, hidden, T{1}, h_prev, wh.value().ptr(), T{1}, a);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t o = (step * n + r) * hidden;
      lstm_cell(a + r * g4, c_prev + r * hidden, hidden, cells->data() + o,
                tanh_cells->data() + o, hiddens->data() + o);
      std::copy_n(hiddens->data() + o, hidden, out.ptr() + (r * steps + t) * hidden);
    }
  }

  const int ix = x.id, iwx = wx.id, iwh = wh.id, ib = b.id;
  return x.tape->record(
      std::move(out), {x, wx, wh, b}, "lstm_scan",
      [=](Tape<T>& tp, int self) {
        const auto& gout = tp.upstream(self);
        const bool need_x = tp.requires_grad(ix);
        const bool need_wx = tp.requires_grad(iwx);
        const bool need_wh = tp.requires_grad(iwh);
        const bool need_b = tp.requires_grad(ib);
        std::vector<T> dh_next(n * hidden, T{0}), dc_next(n * hidden, T{0});
        std::vector<T> da(n * g4), dx_step(n * in);
        const std::vector<T> zero_state(n * hidden, T{0});
        for (std::size_t step = steps; step-- > 0;) {
          const std::size_t t = reverse ? steps - 1 - step : step;
          const T* a = gates->data() + step * n * g4;
          const T* c_prev = step ? cells->data() + (step - 1) * n * hidden : zero_state.data();
          const T* h_prev = step ? hiddens->data() + (step - 1) * n * hidden : zero_state.data();
          for (std::size_t r = 0; r < n; ++r) {
            const T* ig = a + r * g4;
            const T* fg = ig + hidden;
            const T* gg = ig + 2 * hidden;
            const T* og = ig + 3 * hidden;
            const T* tc = tanh_cells->data() + (step * n + r) * hidden;
            T* dar = da.data() + r * g4;
            for (std::size_t j = 0; j < hidden; ++j) {
              const std::size_t k = r * hidden + j;
              const T dh = gout[(r * steps + t) * hidden + j] + dh_next[k];
              const T dc = dh * og[j] * (T{1} - tc[j] * tc[j]) + dc_next[k];
              const T d_o = dh * tc[j];
              const T d_i = dc * gg[j];
              const T d_g = dc * ig[j];
              const T d_f = dc * c_prev[k];
              dc_next[k] = dc * fg[j];
              dar[j] = d_i * ig[j] * (T{1} - ig[j]);
              dar[hidden + j] = d_f * fg[j] * (T{1} - fg[j]);
              dar[2 * hidden + j] = d_g * (T{1} - gg[j] * gg[j]);
              dar[3 * hidden + j] = d_o * og[j] * (T{1} - og[j]);
            }
          }
          const T* xt = xs->data() + step * n * in;
          if (need_wx) {
            linalg::gemm<T>(true, false, in, g4, n, T{1}, xt, da.data(), T{1},
                            tp.grad_accum(iwx).ptr());
          }
          if (need_wh) {
            linalg::gemm<T>(true, false, hidden, g4, n, T{1}, h_prev, da.data(), T{1},
                            tp.grad_accum(iwh).ptr());
          }
          if (need_b) {
            auto& gb = tp.grad_accum(ib);
            for (std::size_t r = 0; r < n; ++r)
              for (std::size_t j = 0; j < g4; ++j) gb[j] += da[r * g4 + j];
          }
          if (need_x) {
            linalg::gemm<T>(false, true, n, in, g4, T{1}, da.data(), tp.value(iwx).ptr(), T{0},
                            dx_step.data());
            auto& gx = tp.grad_accum(ix);
            for (std::size_t r = 0; r < n; ++r)
              for (std::size_t j = 0; j < in; ++j) gx[(r * steps + t) * in + j] += dx_step[r * in + j];
          }
          linalg::gemm<T>(false, true, n, hidden, g4, T{1}, da.data(), tp.value(iwh).ptr(), T{0},
                          dh_next.data());
        }
      });
}

}  // namespace ops

#define THUMBSEED_INSTANTIATE_OPS(T)                                                           \
  template BasicTensor<T> conv2d_forward<T>(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                            const BasicTensor<T>&, std::size_t, Padding);      \
  template std::vector<T> softmax<T>(std::span<const T>);                                      \
  template LstmState<T> lstm_step<T>(std::span<const T>, std::span<const T>,                  \
                                     std::span<const T>, const BasicTensor<T>&,               \
                                     const BasicTensor<T>&, const BasicTensor<T>&);           \
  template Var<T> ops::add<T>(Var<T>, Var<T>);                                                 \
  template Var<T> ops::mul<T>(Var<T>, Var<T>);                                                 \
  template Var<T> ops::scale<T>(Var<T>, T);                                                    \
  template Var<T> ops::sum<T>(Var<T>);                                                         \
  template Var<T> ops::relu<T>(Var<T>);                                                        \
  template Var<T> ops::sigmoid<T>(Var<T>);                                                     \
  template Var<T> ops::tanh<T>(Var<T>);                                                        \
  template Var<T> ops::reshape<T>(Var<T>, Shape);                                              \
  template Var<T> ops::slice<T>(Var<T>, std::size_t, Shape);                                   \
  template Var<T> ops::concat_last<T>(Var<T>, Var<T>);                                         \
  template Var<T> ops::transpose01<T>(Var<T>);                                                 \
  template Var<T> ops::matmul<T>(Var<T>, Var<T>);                                              \
  template Var<T> ops::linear<T>(Var<T>, Var<T>, Var<T>);                                      \
  template Var<T> ops::conv2d<T>(Var<T>, Var<T>, Var<T>, std::size_t, Padding);                \
  template Var<T> ops::avg_pool2<T>(Var<T>);                                                   \
  template Var<T> ops::softmax_rows<T>(Var<T>);                                                \
  template Var<T> ops::lstm_scan<T>(Var<T>, Var<T>, Var<T>, Var<T>, bool);

THUMBSEED_INSTANTIATE_OPS(float)
THUMBSEED_INSTANTIATE_OPS(double)

}  // namespace thumbseed
