// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "thumbseed/adam.hpp"
#include "thumbseed/checkpoint.hpp"
#include "thumbseed/errors.hpp"
#include "thumbseed/gradcheck.hpp"
#include "thumbseed/init.hpp"
#include "thumbseed/linalg.hpp"
#include "thumbseed/ops.hpp"
#include "thumbseed/params.hpp"
#include "thumbseed/rng.hpp"

using namespace thumbseed;

namespace {

// Direct-summation cross-correlation, independent of the library kernel.
std::vector<double> naive_conv(const Tensor& x, const Tensor& k, const Tensor& b,
                               std::size_t stride, bool same, std::size_t* oh, std::size_t* ow) {
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  const std::size_t kh = k.dim(0), kw = k.dim(1), co = k.dim(3);
  std::size_t pt = 0, pl = 0;
  if (same) {
    *oh = (H + stride - 1) / stride;
    *ow = (W + stride - 1) / stride;
    const std::size_t ph = std::max<long>(0, long((*oh - 1) * stride + kh) - long(H));
    const std::size_t pw = std::max<long>(0, long((*ow - 1) * stride + kw) - long(W));
    pt = ph / 2;
    pl = pw / 2;
  } else {
    *oh = (H - kh) / stride + 1;
    *ow = (W - kw) / stride + 1;
  }
  std::vector<double> out(*oh * *ow * co);
  for (std::size_t i = 0; i < *oh; ++i)
    for (std::size_t j = 0; j < *ow; ++j)
      for (std::size_t o = 0; o < co; ++o) {
        double s = b[o];
        for (std::size_t u = 0; u < kh; ++u)
          for (std::size_t v = 0; v < kw; ++v) {
            const long y = long(i * stride + u) - long(pt);
            const long xx = long(j * stride + v) - long(pl);
            if (y < 0 || xx < 0 || y >= long(H) || xx >= long(W)) continue;
            for (std::size_t c = 0; c < C; ++c)
              s += double(x.at(y, xx, c)) * double(k[((u * kw + v) * C + c) * co + o]);
          }
        out[(i * *ow + j) * co + o] = s;
      }
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("tensor shape must match data length") {
  CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<float>(5)), InvalidArgument);
  Tensor t(Shape{2, 3, 4});
  CHECK(t.size() == 24);
  CHECK_THROWS_AS(t.reshaped({5, 5}), InvalidArgument);
  CHECK(t.reshaped({4, 6}).shape() == Shape{4, 6});
  CHECK(Tensor::scalar(3.0f).item() == 3.0f);
  CHECK_THROWS_AS(t.item(), InvalidArgument);
}

TEST_CASE("gemm agrees with a triple loop for every transpose combination") {
  Rng rng(11);
  const std::size_t m = 5, n = 7, k = 3;
  for (int ta = 0; ta < 2; ++ta)
    for (int tb = 0; tb < 2; ++tb) {
      std::vector<double> a(m * k), b(k * n), c(m * n, 1.0);
      for (auto& v : a) v = rng.uniform(-1, 1);
      for (auto& v : b) v = rng.uniform(-1, 1);
      std::vector<double> expect(m * n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = ta ? a[p * m + i] : a[i * k + p];
            const double bv = tb ? b[j * k + p] : b[p * n + j];
            s += av * bv;
          }
          expect[i * n + j] = 2.0 * s + 0.5 * 1.0;
        }
      linalg::gemm<double>(ta, tb, m, n, k, 2.0, a.data(), b.data(), 0.5, c.data());
      for (std::size_t i = 0; i < m * n; ++i) CHECK(c[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d identity and zero kernels") {
  Rng rng(1);
  Tensor x = gaussian_tensor({4, 5, 1}, rng, 1.0);
  Tensor one(Shape{1, 1, 1, 1}, 1.0f);
  Tensor zero_b(Shape{1});
  CHECK(conv2d_forward(x, one, zero_b, 1, Padding::Same) == x);

  Tensor x3 = gaussian_tensor({4, 4, 3}, rng, 1.0);
  Tensor zk(Shape{3, 3, 3, 2});
  Tensor b(Shape{2}, std::vector<float>{0.25f, -1.5f});
  Tensor y = conv2d_forward(x3, zk, b, 1, Padding::Same);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(y.at(i, j, 0) == 0.25f);
      CHECK(y.at(i, j, 1) == -1.5f);
    }
}

TEST_CASE("conv2d all-ones 3x3 on constant input counts the in-bounds taps") {
  Tensor x(Shape{5, 5, 1}, 1.0f);
  Tensor k(Shape{3, 3, 1, 1}, 1.0f);
  Tensor y = conv2d_forward(x, k, Tensor(Shape{1}), 1, Padding::Same);
  CHECK(y.at(0, 0, 0) == 4.0f);
  CHECK(y.at(4, 4, 0) == 4.0f);
  CHECK(y.at(0, 2, 0) == 6.0f);
  CHECK(y.at(2, 2, 0) == 9.0f);
  CHECK(y.at(1, 3, 0) == 9.0f);
}

TEST_CASE("conv2d matches direct summation") {
  Rng rng(2);
  struct Case {
    Shape in, k;
    std::size_t stride;
    Padding pad;
  };
  const std::vector<Case> cases{{{6, 7, 3}, {3, 3, 3, 4}, 1, Padding::Same},
                                {{6, 7, 3}, {3, 3, 3, 2}, 2, Padding::Same},
                                {{7, 6, 2}, {3, 3, 2, 3}, 2, Padding::Valid},
                                {{5, 5, 4}, {1, 1, 4, 5}, 1, Padding::Same},
                                {{8, 8, 2}, {2, 2, 2, 2}, 1, Padding::Same}};
  for (const auto& c : cases) {
    Tensor x = gaussian_tensor(c.in, rng, 1.0);
    Tensor k = gaussian_tensor(c.k, rng, 1.0);
    Tensor b = gaussian_tensor({c.k[3]}, rng, 1.0);
    std::size_t oh = 0, ow = 0;
    auto expect = naive_conv(x, k, b, c.stride, c.pad == Padding::Same, &oh, &ow);
    Tensor y = conv2d_forward(x, k, b, c.stride, c.pad);
    REQUIRE(y.shape() == Shape{oh, ow, c.k[3]});
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-5));
  }
}

TEST_CASE("conv2d same padding preserves spatial shape for kernel sizes 1 and 3") {
  Rng rng(3);
  for (std::size_t ks : {1u, 3u}) {
    Tensor x = gaussian_tensor({7, 9, 2}, rng, 1.0);
    Tensor y = conv2d_forward(x, gaussian_tensor({ks, ks, 2, 3}, rng, 1.0), Tensor(Shape{3}), 1,
                              Padding::Same);
    CHECK(y.shape() == Shape{7, 9, 3});
  }
}

TEST_CASE("conv2d rejects mismatched channels and zero stride") {
  Tensor x(Shape{4, 4, 3});
  CHECK_THROWS_AS(conv2d_forward(x, Tensor(Shape{3, 3, 2, 1}), Tensor(Shape{1}), 1, Padding::Same),
                  InvalidArgument);
  CHECK_THROWS_AS(conv2d_forward(x, Tensor(Shape{3, 3, 3, 1}), Tensor(Shape{1}), 0, Padding::Same),
                  InvalidArgument);
}

TEST_CASE("softmax") {
  SUBCASE("uniform logits") {
    std::vector<double> z(7, 3.25);
    for (double p : softmax<double>(z)) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-12));
  }
  SUBCASE("zero and ln 2") {
    std::vector<double> z{0.0, std::log(2.0)};
    auto p = softmax<double>(z);
    CHECK(p[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }
  SUBCASE("shift invariance, normalization and large logits") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<float> z(1 + rng.below(40));
      // Multiples of 2^-10 plus an integer shift stay exact in float.
      for (auto& v : z) v = std::round(static_cast<float>(rng.uniform(-20, 20)) * 1024.0f) / 1024.0f;
      const float c = std::round(static_cast<float>(rng.uniform(-500, 500)));
      std::vector<float> zc(z);
      for (auto& v : zc) v += c;
      auto p = softmax<float>(z);
      auto q = softmax<float>(zc);
      double sum = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] >= 0.0f);
        CHECK(std::abs(p[i] - q[i]) <= 1e-6);
        sum += p[i];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
    std::vector<float> big{1000.0f, 1000.0f};
    auto p = softmax<float>(big);
    CHECK(p[0] == 0.5f);
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(softmax<float>(std::vector<float>{}), InvalidArgument); }
}

TEST_CASE("lstm_step") {
  Rng rng(5);
  const std::size_t in = 3, hidden = 4;
  SUBCASE("zero weights and states give zero outputs") {
    std::vector<double> x{0.3, -2.0, 7.0}, h(hidden), c(hidden);
    BasicTensor<double> wx(Shape{in, 4 * hidden}), wh(Shape{hidden, 4 * hidden}),
        b(Shape{4 * hidden});
    auto s = lstm_step<double>(x, h, c, wx, wh, b);
    for (double v : s.h) CHECK(v == 0.0);
    for (double v : s.c) CHECK(v == 0.0);
  }
  SUBCASE("saturated forget gate keeps the cell") {
    std::vector<double> x{0.3, -2.0, 7.0}, h(hidden), c{0.5, -1.25, 2.0, 0.1};
    BasicTensor<double> wx(Shape{in, 4 * hidden}), wh(Shape{hidden, 4 * hidden}),
        b(Shape{4 * hidden});
    for (std::size_t j = 0; j < hidden; ++j) b[hidden + j] = 40.0;
    auto s = lstm_step<double>(x, h, c, wx, wh, b);
    for (std::size_t j = 0; j < hidden; ++j) CHECK(std::abs(s.c[j] - c[j]) < 1e-3);
  }
  SUBCASE("matches the gate equations") {
    std::vector<double> x(in), h(hidden), c(hidden);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : h) v = rng.uniform(-1, 1);
    for (auto& v : c) v = rng.uniform(-1, 1);
    auto wx = gaussian_tensor({in, 4 * hidden}, rng, 0.7).cast<double>();
    auto wh = gaussian_tensor({hidden, 4 * hidden}, rng, 0.7).cast<double>();
    auto b = gaussian_tensor({4 * hidden}, rng, 0.7).cast<double>();
    auto s = lstm_step<double>(x, h, c, wx, wh, b);
    for (std::size_t j = 0; j < hidden; ++j) {
      double z[4];
      for (int g = 0; g < 4; ++g) {
        const std::size_t col = g * hidden + j;
        z[g] = b[col];
        for (std::size_t p = 0; p < in; ++p) z[g] += x[p] * wx[p * 4 * hidden + col];
        for (std::size_t p = 0; p < hidden; ++p) z[g] += h[p] * wh[p * 4 * hidden + col];
      }
      const double cn = sigmoid(z[1]) * c[j] + sigmoid(z[0]) * std::tanh(z[2]);
      CHECK(s.c[j] == doctest::Approx(cn).epsilon(1e-12));
      CHECK(s.h[j] == doctest::Approx(sigmoid(z[3]) * std::tanh(cn)).epsilon(1e-12));
    }
  }
  SUBCASE("output size is the hidden size for any input size") {
    for (std::size_t n : {1u, 2u, 9u}) {
      std::vector<float> x(n, 0.5f), h(hidden), c(hidden);
      Tensor wx(Shape{n, 4 * hidden}, 0.1f), wh(Shape{hidden, 4 * hidden}), b(Shape{4 * hidden});
      auto s = lstm_step<float>(x, h, c, wx, wh, b);
      CHECK(s.h.size() == hidden);
      CHECK(s.c.size() == hidden);
    }
  }
  SUBCASE("dimension mismatch") {
    std::vector<float> x(3), h(hidden), c(hidden + 1);
    Tensor wx(Shape{3, 4 * hidden}), wh(Shape{hidden, 4 * hidden}), b(Shape{4 * hidden});
    CHECK_THROWS_AS(lstm_step<float>(x, h, c, wx, wh, b), InvalidArgument);
    std::vector<float> x2(2), c2(hidden);
    CHECK_THROWS_AS(lstm_step<float>(x2, h, c2, wx, wh, b), InvalidArgument);
  }
}

TEST_CASE("bilinear_resize") {
  Rng rng(6);
  Tensor img = gaussian_tensor({5, 6, 3}, rng, 1.0);
  SUBCASE("same size is the identity") {
    Tensor out = bilinear_resize(img, 5, 6);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(out[i] - img[i]) <= 1e-6);
  }
  SUBCASE("constant image stays constant") {
    Tensor c(Shape{4, 3, 2}, 0.375f);
    const Tensor out = bilinear_resize(c, 9, 2);
    for (float v : out.data()) CHECK(v == doctest::Approx(0.375f));
  }
  SUBCASE("half-pixel sampling of a two-texel row") {
    Tensor row(Shape{1, 2, 1}, std::vector<float>{0.0f, 1.0f});
    Tensor out = bilinear_resize(row, 1, 4);
    const float expect[] = {0.0f, 0.25f, 0.75f, 1.0f};
    for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(expect[i]).epsilon(1e-7));
  }
  SUBCASE("outputs stay within the input range") {
    for (auto [h, w] : {std::pair{3, 11}, std::pair{17, 2}, std::pair{1, 1}, std::pair{10, 12}}) {
      Tensor out = bilinear_resize(img, h, w);
      for (std::size_t c = 0; c < 3; ++c) {
        float lo = 1e9f, hi = -1e9f;
        for (std::size_t i = 0; i < 30; ++i) {
          lo = std::min(lo, img[i * 3 + c]);
          hi = std::max(hi, img[i * 3 + c]);
        }
        for (std::size_t i = 0; i < out.size() / 3; ++i) {
          CHECK(out[i * 3 + c] >= lo - 1e-6f);
          CHECK(out[i * 3 + c] <= hi + 1e-6f);
        }
      }
    }
  }
  SUBCASE("zero target size") {
    CHECK_THROWS_AS(bilinear_resize(img, 0, 3), InvalidArgument);
    CHECK_THROWS_AS(bilinear_resize(img, 3, 0), InvalidArgument);
  }
}

TEST_CASE("backward") {
  Tape<double> tape;
  BasicTensor<double> xv(Shape{2, 3}, std::vector<double>{1, -2, 3, 0.5, 0, -7});
  Var<double> x = tape.leaf(xv, true);
  Var<double> p = tape.leaf(BasicTensor<double>(Shape{4}, 1.0), true);
  Var<double> loss = ops::sum(ops::mul(x, x));
  tape.backward(loss);
  SUBCASE("sum of squares gives 2x") {
    auto g = tape.grad(x);
    for (std::size_t i = 0; i < 6; ++i) CHECK(g[i] == 2 * xv[i]);
  }
  SUBCASE("disconnected parameter gets zero gradient of its own shape") {
    auto g = tape.grad(p);
    CHECK(g.shape() == Shape{4});
    for (double v : g.data()) CHECK(v == 0.0);
  }
  SUBCASE("non-scalar loss") { CHECK_THROWS_AS(tape.backward(x), InvalidArgument); }
}

TEST_CASE("backward yields one shape-matched gradient per parameter") {
  NamedTensors<double> params;
  Rng rng(7);
  params.add("w", gaussian_tensor({3, 2}, rng, 1.0).cast<double>());
  params.add("b", gaussian_tensor({2}, rng, 1.0).cast<double>());
  params.add("unused", gaussian_tensor({5}, rng, 1.0).cast<double>());
  Tape<double> tape;
  ParamVars<double> vars(tape, params);
  Var<double> x = tape.leaf(gaussian_tensor({4, 3}, rng, 1.0).cast<double>());
  tape.backward(ops::sum(ops::tanh(ops::linear(x, vars["w"], vars["b"]))));
  auto grads = vars.gradients();
  CHECK(grads.names() == params.names());
  for (const auto& n : params.names()) {
    CHECK(grads.get(n).shape() == params.get(n).shape());
    CHECK(grads.get(n).all_finite());
  }
  for (double v : grads.get("unused").data()) CHECK(v == 0.0);
}

TEST_CASE("grad_check") {
  SUBCASE("quadratic is exact up to rounding") {
    NamedTensors<double> params;
    params.add("x", BasicTensor<double>(Shape{3}, std::vector<double>{0.5, -1.0, 2.0}));
    auto checks = grad_check(
        [](Tape<double>&, const ParamVars<double>& p) {
          Var<double> x = p["x"];
          return ops::sum(ops::add(ops::mul(x, x), ops::scale(x, 3.0)));
        },
        params);
    REQUIRE(checks.size() == 1);
    CHECK(checks[0].max_rel_error < 1e-6);
  }
  SUBCASE("dead parameters report zero error") {
    NamedTensors<double> params;
    params.add("live", BasicTensor<double>(Shape{2}, 1.0));
    params.add("dead", BasicTensor<double>(Shape{2}, 1.0));
    auto checks = grad_check(
        [](Tape<double>&, const ParamVars<double>& p) {
          Var<double> unused = ops::scale(p["dead"], 2.0);
          (void)unused;
          return ops::sum(ops::mul(p["live"], p["live"]));
        },
        params);
    REQUIRE(checks.size() == 2);
    CHECK(checks[1].name == "dead");
    CHECK(checks[1].max_rel_error == 0.0);
  }
  SUBCASE("non-deterministic forward is a contract violation") {
    NamedTensors<double> params;
    params.add("x", BasicTensor<double>(Shape{1}, 1.0));
    int calls = 0;
    CHECK_THROWS_AS(grad_check(
                        [&calls](Tape<double>& tape, const ParamVars<double>& p) {
                          ++calls;
                          Var<double> noise = tape.leaf(BasicTensor<double>::scalar(calls * 0.1));
                          return ops::add(ops::sum(p["x"]), noise);
                        },
                        params),
                    ContractViolation);
  }
  SUBCASE("relative error convention") {
    CHECK(relative_error(0.0, 0.0) == 0.0);
    CHECK(relative_error(1.0, 0.5) == doctest::Approx(0.5));
    CHECK(relative_error(1e-12, 0.0) == doctest::Approx(1e-4));
  }
}

TEST_CASE("adam_step") {
  AdamConfig cfg;
  Rng rng(8);
  ParamStore params;
  params.add("a", gaussian_tensor({3}, rng, 1.0));
  params.add("b", gaussian_tensor({3}, rng, 1.0));

  SUBCASE("zero gradient leaves parameters unchanged") {
    const ParamStore before = params;
    ParamStore grads;
    grads.add("a", Tensor(Shape{3}));
    grads.add("b", Tensor(Shape{3}));
    AdamState state;
    adam_step(params, grads, state, cfg);
    CHECK(params == before);
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves each element by about lr") {
    const ParamStore before = params;
    ParamStore grads;
    grads.add("a", Tensor(Shape{3}, 0.37f));
    grads.add("b", Tensor(Shape{3}, -4.0f));
    AdamState state;
    adam_step(params, grads, state, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs((before.get("a")[i] - params.get("a")[i]) - cfg.lr) < 1e-4);
      CHECK(std::abs((params.get("b")[i] - before.get("b")[i]) - cfg.lr) < 1e-4);
    }
    CHECK(state.m.get("a").shape() == params.get("a").shape());
    CHECK(state.v.get("b").shape() == params.get("b").shape());
  }
  SUBCASE("equal gradients give equal updates") {
    ParamStore p;
    p.add("x", Tensor(Shape{2}, 1.0f));
    p.add("y", Tensor(Shape{2}, 1.0f));
    ParamStore g;
    g.add("x", Tensor(Shape{2}, std::vector<float>{0.5f, -0.2f}));
    g.add("y", Tensor(Shape{2}, std::vector<float>{0.5f, -0.2f}));
    AdamState state;
    for (int i = 0; i < 3; ++i) adam_step(p, g, state, cfg);
    CHECK(p.get("x") == p.get("y"));
  }
  SUBCASE("step counter strictly increases") {
    ParamStore grads;
    grads.add("a", Tensor(Shape{3}, 1.0f));
    grads.add("b", Tensor(Shape{3}, 1.0f));
    AdamState state;
    for (std::uint64_t i = 1; i <= 4; ++i) {
      adam_step(params, grads, state, cfg);
      CHECK(state.step == i);
    }
  }
  SUBCASE("NaN gradient diverges without touching anything") {
    ParamStore grads;
    grads.add("a", Tensor(Shape{3}, 1.0f));
    grads.add("b", Tensor(Shape{3}, std::vector<float>{0, std::numeric_limits<float>::quiet_NaN(), 0}));
    ParamStore clean;
    clean.add("a", Tensor(Shape{3}, 1.0f));
    clean.add("b", Tensor(Shape{3}, 1.0f));
    AdamState state;
    adam_step(params, clean, state, cfg);
    const ParamStore before = params;
    const std::uint64_t step = state.step;
    CHECK_THROWS_AS(adam_step(params, grads, state, cfg), TrainingDivergence);
    CHECK(params == before);
    CHECK(state.step == step);
  }
  SUBCASE("gradient shape mismatch") {
    ParamStore grads;
    grads.add("a", Tensor(Shape{4}));
    grads.add("b", Tensor(Shape{3}));
    AdamState state;
    CHECK_THROWS_AS(adam_step(params, grads, state, cfg), InvalidArgument);
  }
}

TEST_CASE("checkpoint container") {
  ParamStore t;
  t.add("w", Tensor(Shape{2}, std::vector<float>{1.0f, -2.5f}));
  SUBCASE("byte layout") {
    const std::vector<std::uint8_t> expect{
        'T', 'H', 'M', 'B', 1, 0, 0, 0,     // count
        1, 0, 'w',                          // name
        1, 2, 0, 0, 0,                      // rank, dim
        0x00, 0x00, 0x80, 0x3f,             // 1.0f
        0x00, 0x00, 0x20, 0xc0};            // -2.5f
    CHECK(encode_tensors(t) == expect);
  }
  SUBCASE("bit-exact roundtrip") {
    Rng rng(9);
    ParamStore p;
    p.add("a.weight", gaussian_tensor({3, 3, 2, 4}, rng, 1.0));
    p.add("scalar", Tensor::scalar(std::numeric_limits<float>::denorm_min()));
    p.add("empty", Tensor(Shape{0}));
    p.add("b", Tensor(Shape{5}, -0.0f));
    ParamStore q = decode_tensors(encode_tensors(p));
    CHECK(q.names() == p.names());
    CHECK(encode_tensors(q) == encode_tensors(p));
  }
  SUBCASE("corruption is a format error") {
    auto bytes = encode_tensors(t);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_tensors(bad_magic), FormatError);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_tensors(truncated), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_tensors(trailing), FormatError);
    auto dup = encode_tensors(t);
    dup[4] = 2;
    dup.insert(dup.end(), bytes.begin() + 8, bytes.end());
    CHECK_THROWS_AS(decode_tensors(dup), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_tensors("/nonexistent/x.thmb"), IoError); }
}
