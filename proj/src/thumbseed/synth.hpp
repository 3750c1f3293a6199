// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thumbseed/annotations.hpp"
#include "thumbseed/geometry.hpp"
#include "thumbseed/tensor.hpp"

namespace thumbseed {

// Synthetic salient-object scenes: a low-contrast textured background, a few
// desaturated distractor shapes and one saturated object. The ground-truth
// thumbnail is the object's tight box grown to the query aspect.
struct SceneConfig {
  std::size_t canvas_w = 160;
  std::size_t canvas_h = 160;
  std::size_t object_min = 48;  // tight-box side range, pixels
  std::size_t object_max = 100;
  double object_aspect_min = 0.75;
  double object_aspect_max = 4.0 / 3.0;
  std::size_t clutter_count = 6;
  std::size_t clutter_min = 6;
  std::size_t clutter_max = 20;
  std::vector<double> aspect_pool{0.5, 0.75, 1.0, 1.5, 2.0};
  // 0 places the object uniformly; 1 draws each offset from a triangular
  // distribution peaking at the canvas center.
  double center_bias = 1.0;
  double holdout_aspect = 1.25;  // never drawn for training scenes
  std::size_t max_retries = 200;

  void validate() const;
};

struct Scene {
  Tensor image;  // already quantized to 8-bit levels
  BoxCWH object;
  BoxCWH gt;
  double aspect = 1.0;
};

/// Smallest box of the given aspect that contains the object, centered on it
/// and shifted to fit the canvas; nullopt if it cannot fit. Heights are
/// multiples of 4 px so that dyadic aspects give an exact w / h.
std::optional<BoxCWH> expand_to_aspect(const BoxCWH& object, double aspect, double canvas_w,
                                       double canvas_h);

/// Deterministic in (config, seed, split, index). With aspect unset the
/// query aspect is drawn from the pool.
Scene render_scene(const SceneConfig& config, std::uint64_t seed, const std::string& split,
                   std::size_t index, std::optional<double> aspect = std::nullopt);

/// Writes n scenes as out_dir/images/<split>_NNNNN.ppm plus out_dir/<split>.jsonl
/// and returns the annotations (image paths relative to out_dir).
std::vector<AnnotatedSample> gen_synthetic(const SceneConfig& config, std::size_t n,
                                           std::uint64_t seed, const std::string& out_dir,
                                           const std::string& split,
                                           std::optional<double> aspect = std::nullopt);

}  // namespace thumbseed
