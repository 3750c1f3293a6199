// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "thumbseed/params.hpp"

namespace thumbseed {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ParamStore m;
  ParamStore v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. A parameter whose gradient is identically
/// zero did not take part in the step and is left untouched, moments
/// included. Any non-finite gradient throws TrainingDivergence before
/// anything is modified.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace thumbseed
