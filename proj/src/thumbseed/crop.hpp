// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "thumbseed/geometry.hpp"
#include "thumbseed/tensor.hpp"

namespace thumbseed {

/// Samples the box region bilinearly onto an out_h x out_w grid (half-pixel
/// centers, edge-clamped reads). The box should already be clipped.
Tensor crop_and_resize(const Tensor& image, const BoxCWH& box, std::size_t out_h,
                       std::size_t out_w);

}  // namespace thumbseed
