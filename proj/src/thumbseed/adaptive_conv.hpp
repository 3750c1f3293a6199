// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "thumbseed/params.hpp"
#include "thumbseed/rng.hpp"

namespace thumbseed {

struct KernelGeometry {
  std::size_t kh = 1;
  std::size_t kw = 1;
  std::size_t cin = 0;
  std::size_t cout = 0;

  std::size_t kernel_size() const { return kh * kw * cin * cout; }
  std::size_t output_size() const { return kernel_size() + cout; }
};

// Filter manifold network: dense layers from the encoded aspect ratio to a
// flat vector holding a convolution kernel followed by its bias.
struct FmnConfig {
  KernelGeometry geometry;
  std::vector<std::size_t> hidden{16, 64};

  void validate() const;
};

// Aspect range covered by the training data; the FMN extrapolates outside it.
inline constexpr double kTrainedAspectMin = 0.5;
inline constexpr double kTrainedAspectMax = 2.0;

enum class Activation { Linear, Relu, Sigmoid };

/// Side information for an aspect ratio a: [a, ln a]. Throws on a <= 0.
std::array<double, 2> encode_side_info(double aspect);

/// Weights N(0, stddev); the output layer is drawn output_scale times smaller.
void init_fmn_params(ParamStore& params, const std::string& prefix, const FmnConfig& config,
                     Rng& rng, double stddev, double output_scale);

template <typename T>
struct AdaptiveKernel {
  Var<T> kernel;
  Var<T> bias;
};

template <typename T>
AdaptiveKernel<T> fmn_forward(Tape<T>& tape, double aspect, const ParamVars<T>& params,
                              const std::string& prefix, const FmnConfig& config);

template <typename T>
Var<T> apply_activation(Var<T> x, Activation activation);

/// activation(conv2d(x, fmn(aspect))) with same padding, stride 1.
template <typename T>
Var<T> adaptive_conv(Var<T> x, double aspect, const ParamVars<T>& params,
                     const std::string& prefix, const FmnConfig& config, Activation activation);

/// Kernel+bias vector generated for one aspect, outside any training tape.
std::vector<float> materialize_fmn(const ParamStore& params, const std::string& prefix,
                                   const FmnConfig& config, double aspect);

struct KernelSmoothness {
  std::vector<double> aspects;
  // L2 distance between consecutive generated kernels divided by the aspect gap.
  std::vector<double> gaps;
  double max_gap = 0.0;
  double median_gap = 0.0;
};

/// Discrete Lipschitz estimate of the generated kernels over n log-spaced aspects.
KernelSmoothness kernel_smoothness(const ParamStore& params, const std::string& prefix,
                                   const FmnConfig& config, double a_lo, double a_hi,
                                   std::size_t n);

}  // namespace thumbseed
