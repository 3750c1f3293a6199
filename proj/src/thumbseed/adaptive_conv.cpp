// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/adaptive_conv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thumbseed/init.hpp"
#include "thumbseed/log.hpp"
#include "thumbseed/ops.hpp"

namespace thumbseed {
namespace {

std::string layer_name(const std::string& prefix, std::size_t i) {
  return prefix + ".fc" + std::to_string(i);
}

}  // namespace

void FmnConfig::validate() const {
  if (geometry.cin == 0 || geometry.cout == 0 || geometry.kh == 0 || geometry.kw == 0) {
    throw InvalidArgument("fmn: kernel geometry must be positive");
  }
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i] == 0 || (i > 0 && hidden[i] <= hidden[i - 1])) {
      throw InvalidArgument("fmn: hidden layer sizes must be positive and strictly increasing");
    }
  }
}

std::array<double, 2> encode_side_info(double aspect) {
  if (!(aspect > 0.0) || !std::isfinite(aspect)) {
    throw InvalidArgument("aspect ratio must be positive and finite, got " +
                          std::to_string(aspect));
  }
  return {aspect, std::log(aspect)};
}

void init_fmn_params(ParamStore& params, const std::string& prefix, const FmnConfig& config,
                     Rng& rng, double stddev, double output_scale) {
  config.validate();
  std::size_t in = 2;
  const std::size_t layers = config.hidden.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const bool last = i + 1 == layers;
    const std::size_t out = last ? config.geometry.output_size() : config.hidden[i];
    params.add(layer_name(prefix, i) + ".weight",
               gaussian_tensor({in, out}, rng, last ? stddev * output_scale : stddev));
    params.add(layer_name(prefix, i) + ".bias", Tensor(Shape{out}));
    in = out;
  }
}

template <typename T>
AdaptiveKernel<T> fmn_forward(Tape<T>& tape, double aspect, const ParamVars<T>& params,
                              const std::string& prefix, const FmnConfig& config) {
  const auto z = encode_side_info(aspect);
  if (aspect < kTrainedAspectMin || aspect > kTrainedAspectMax) {
    log::warn("aspect " + std::to_string(aspect) + " lies outside the trained range [0.5, 2]");
  }
  Var<T> h = tape.leaf(BasicTensor<T>(Shape{1, 2}, {static_cast<T>(z[0]), static_cast<T>(z[1])}));
  const std::size_t layers = config.hidden.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string name = layer_name(prefix, i);
    h = ops::linear(h, params[name + ".weight"], params[name + ".bias"]);
    if (i + 1 < layers) h = ops::tanh(h);
  }
  const KernelGeometry& g = config.geometry;
  if (h.size() != g.output_size()) {
    throw InvalidArgument("fmn '" + prefix + "': output length " + std::to_string(h.size()) +
                          " does not match kernel geometry (" + std::to_string(g.output_size()) +
                          ")");
  }
  return {ops::slice(h, 0, {g.kh, g.kw, g.cin, g.cout}), ops::slice(h, g.kernel_size(), {g.cout})};
}

template <typename T>
Var<T> apply_activation(Var<T> x, Activation activation) {
  switch (activation) {
    case Activation::Relu:
      return ops::relu(x);
    case Activation::Sigmoid:
      return ops::sigmoid(x);
    case Activation::Linear:
      break;
  }
  return x;
}

template <typename T>
Var<T> adaptive_conv(Var<T> x, double aspect, const ParamVars<T>& params,
                     const std::string& prefix, const FmnConfig& config, Activation activation) {
  if (x.shape().size() != 3 || x.shape()[2] != config.geometry.cin) {
    throw InvalidArgument("adaptive_conv '" + prefix + "': input " + shape_str(x.shape()) +
                          " does not have " + std::to_string(config.geometry.cin) + " channels");
  }
  AdaptiveKernel<T> k = fmn_forward(*x.tape, aspect, params, prefix, config);
  return apply_activation(ops::conv2d(x, k.kernel, k.bias, 1, Padding::Same), activation);
}

std::vector<float> materialize_fmn(const ParamStore& params, const std::string& prefix,
                                   const FmnConfig& config, double aspect) {
  Tape<float> tape;
  ParamVars<float> vars(tape, params, false);
  AdaptiveKernel<float> k = fmn_forward(tape, aspect, vars, prefix, config);
  std::vector<float> out(k.kernel.value().data().begin(), k.kernel.value().data().end());
  out.insert(out.end(), k.bias.value().data().begin(), k.bias.value().data().end());
  return out;
}

KernelSmoothness kernel_smoothness(const ParamStore& params, const std::string& prefix,
                                   const FmnConfig& config, double a_lo, double a_hi,
                                   std::size_t n) {
  if (!(a_lo > 0.0) || !(a_lo < a_hi) || n < 2) {
    throw InvalidArgument("kernel_smoothness: need 0 < a_lo < a_hi and n >= 2");
  }
  KernelSmoothness out;
  const double step = std::log(a_hi / a_lo) / static_cast<double>(n - 1);
  std::vector<float> prev;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i + 1 == n ? a_hi : a_lo * std::exp(step * static_cast<double>(i));
    std::vector<float> cur = materialize_fmn(params, prefix, config, a);
    if (i > 0) {
      double sq = 0.0;
      for (std::size_t j = 0; j < cur.size(); ++j) {
        const double d = static_cast<double>(cur[j]) - prev[j];
        sq += d * d;
      }
      out.gaps.push_back(std::sqrt(sq) / (a - out.aspects.back()));
    }
    out.aspects.push_back(a);
    prev = std::move(cur);
  }
  out.max_gap = *std::max_element(out.gaps.begin(), out.gaps.end());
  std::vector<double> sorted = out.gaps;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  out.median_gap = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return out;
}

#define THUMBSEED_INSTANTIATE_FMN(T)                                                          \
  template AdaptiveKernel<T> fmn_forward<T>(Tape<T>&, double, const ParamVars<T>&,           \
                                            const std::string&, const FmnConfig&);           \
  template Var<T> apply_activation<T>(Var<T>, Activation);                                  \
  template Var<T> adaptive_conv<T>(Var<T>, double, const ParamVars<T>&, const std::string&, \
                                   const FmnConfig&, Activation);

THUMBSEED_INSTANTIATE_FMN(float)
THUMBSEED_INSTANTIATE_FMN(double)

}  // namespace thumbseed
