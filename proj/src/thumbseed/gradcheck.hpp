// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "thumbseed/params.hpp"

namespace thumbseed {

using LossFn = std::function<Var<double>(Tape<double>&, const ParamVars<double>&)>;

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t elements = 0;
  // Elements whose +/- epsilon probes would have flipped a ReLU.
  std::size_t kinked = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8); 0 when both vanish.
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of a scalar loss against central
/// differences with step epsilon, element by element. Checks run in double
/// precision. Throws ContractViolation if two evaluations at the same point
/// disagree.
std::vector<ParamCheck> grad_check(const LossFn& loss, const NamedTensors<double>& params,
                                   double epsilon = 1e-3);

}  // namespace thumbseed
