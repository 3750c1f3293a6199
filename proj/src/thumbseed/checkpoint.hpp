// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thumbseed/params.hpp"

namespace thumbseed {

// Named-tensor container, all integers little-endian:
//   "THMB" | u32 count | count x (u16 name_len | name | u8 rank | rank x u32 dim | f32 data...)
std::vector<std::uint8_t> encode_tensors(const ParamStore& tensors);
ParamStore decode_tensors(const std::vector<std::uint8_t>& bytes);

void save_tensors(const std::string& path, const ParamStore& tensors);
ParamStore load_tensors(const std::string& path);

}  // namespace thumbseed
