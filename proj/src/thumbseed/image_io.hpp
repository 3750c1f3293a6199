// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thumbseed/tensor.hpp"

namespace thumbseed {

// Images are H x W x 3 float tensors with values in [0, 1]. On disk they are
// binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(const Tensor& image);
Tensor decode_ppm(const std::vector<std::uint8_t>& bytes);

void save_image(const std::string& path, const Tensor& image);
Tensor load_image(const std::string& path);

/// Rounds to the nearest 8-bit level, as a save/load roundtrip would.
Tensor quantize_8bit(const Tensor& image);

}  // namespace thumbseed
