// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thumbseed/tape.hpp"
#include "thumbseed/tensor.hpp"

namespace thumbseed {

enum class Padding { Same, Valid };

// Value kernels. The tape ops below call exactly these for their forward pass.

/// Cross-correlation of an H x W x Cin input with a kh x kw x Cin x Cout kernel.
/// "Same" padding yields ceil(H / stride) x ceil(W / stride) outputs; extra
/// padding goes to the bottom/right when the total is odd.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                              const BasicTensor<T>& bias, std::size_t stride, Padding padding);

/// Numerically stable softmax (max-subtracted). Throws on an empty input.
template <typename T>
std::vector<T> softmax(std::span<const T> logits);

template <typename T>
struct LstmState {
  std::vector<T> h;
  std::vector<T> c;
};

/// One LSTM cell update. Weight layout: wx is In x 4H, wh is H x 4H, b is 4H,
/// gate blocks ordered [input, forget, candidate, output].
template <typename T>
LstmState<T> lstm_step(std::span<const T> x, std::span<const T> h_prev, std::span<const T> c_prev,
                       const BasicTensor<T>& wx, const BasicTensor<T>& wh,
                       const BasicTensor<T>& b);

/// Bilinear resampling of an H x W x C image, half-pixel (align-corners=false)
/// sample positions with edge clamping.
Tensor bilinear_resize(const Tensor& image, std::size_t out_h, std::size_t out_w);

namespace ops {

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T s);
template <typename T>
Var<T> sum(Var<T> a);

template <typename T>
Var<T> relu(Var<T> a);
template <typename T>
Var<T> sigmoid(Var<T> a);
template <typename T>
Var<T> tanh(Var<T> a);

template <typename T>
Var<T> reshape(Var<T> a, Shape shape);
/// Contiguous flat range [offset, offset + numel(shape)) of a, reshaped.
template <typename T>
Var<T> slice(Var<T> a, std::size_t offset, Shape shape);
/// Concatenation along the last axis; leading axes must agree.
template <typename T>
Var<T> concat_last(Var<T> a, Var<T> b);
/// Swaps the first two axes of a rank-3 tensor.
template <typename T>
Var<T> transpose01(Var<T> a);

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
/// x: N x In, w: In x Out, b: Out.
template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b);

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride, Padding padding);
/// 2 x 2 mean pooling with stride 2; spatial dims must be even.
template <typename T>
Var<T> avg_pool2(Var<T> input);

/// Softmax over the last axis of a rank-2 tensor.
template <typename T>
Var<T> softmax_rows(Var<T> logits);

/// Runs one LSTM over N independent sequences: x is N x T x In, output is
/// N x T x H with the hidden state written at each step's own position.
/// With reverse set, each sequence is consumed from its last step.
template <typename T>
Var<T> lstm_scan(Var<T> x, Var<T> wx, Var<T> wh, Var<T> b, bool reverse);

}  // namespace ops
}  // namespace thumbseed
