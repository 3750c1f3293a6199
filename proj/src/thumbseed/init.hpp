// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "thumbseed/rng.hpp"
#include "thumbseed/tensor.hpp"

namespace thumbseed {

inline Tensor gaussian_tensor(Shape shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.normal(0.0, stddev));
  return t;
}

}  // namespace thumbseed
