// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thumbseed/model.hpp"

namespace thumbseed {

struct GradCheckEntry {
  std::string check;  // e.g. "op/conv2d", "module/gca", "model/micro"
  std::string param;
  double error = 0.0;
  std::size_t elements = 0;
  std::size_t kinked = 0;  // elements whose probes crossed a ReLU kink
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double threshold = 1e-3;
  double seconds = 0.0;

  bool passed() const;
  std::vector<GradCheckEntry> failures() const;
  double max_error() const;
};

struct GradCheckOptions {
  std::uint64_t seed = 7;
  double epsilon = 1e-3;
  double threshold = 1e-3;
  bool ops = true;
  bool modules = true;
  bool model = true;
};

/// 32 x 32 input, 8 channels per stage, LSTM and trunk width 16, k = 3.
ModelConfig micro_model_config();

/// Finite-difference checks of every differentiable op, each module on a
/// small configuration, and the full micro-model loss.
GradCheckReport run_gradcheck_suite(const GradCheckOptions& options = {});

}  // namespace thumbseed
