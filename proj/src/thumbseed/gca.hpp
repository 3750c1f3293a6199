// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "thumbseed/params.hpp"
#include "thumbseed/rng.hpp"

namespace thumbseed {

// Global context aggregation over a fixed-size H x W x C feature map.
//
// Two bidirectional LSTMs sweep the map: one along every row (left to right
// and right to left), then one along every column of the row result (top to
// bottom and bottom to top). The row and column outputs are concatenated into
// an H x W x 4*hidden context tensor. A 1x1 convolution turns that context
// into D = H*W attention logits per location; softmax over those logits
// weights the D feature vectors (flattened row-major) into one attended
// vector per location.
struct GcaConfig {
  std::size_t feat_h = 10;
  std::size_t feat_w = 10;
  std::size_t channels = 64;
  std::size_t hidden = 32;

  std::size_t positions() const { return feat_h * feat_w; }
  std::size_t context_channels() const { return 4 * hidden; }
};

void init_gca_params(ParamStore& params, const GcaConfig& config, Rng& rng, double stddev,
                     const std::string& prefix = "gca");

template <typename T>
Var<T> renet_scan(Var<T> features, const ParamVars<T>& params, const std::string& prefix = "gca");

/// 1x1 convolution from the context channels to feat_h * feat_w logits.
template <typename T>
Var<T> attention_logits(Var<T> context, Var<T> weight, Var<T> bias, std::size_t feat_h,
                        std::size_t feat_w);

/// Softmax-normalized attention, one row of D weights per location (D x D).
template <typename T>
Var<T> attention_weights(Var<T> logits);

template <typename T>
Var<T> aggregate(Var<T> features, Var<T> logits);

template <typename T>
Var<T> gca_forward(Var<T> features, const ParamVars<T>& params, const GcaConfig& config,
                   const std::string& prefix = "gca");

}  // namespace thumbseed
