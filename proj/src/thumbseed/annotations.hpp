// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "thumbseed/geometry.hpp"

namespace thumbseed {

inline constexpr double kAspectTolerance = 1e-3;

struct AnnotatedSample {
  std::string image;  // as written in the file
  double aspect = 1.0;
  BoxCWH box;
  double img_w = 0.0;
  double img_h = 0.0;
};

/// Throws ValidationError if the box is empty, leaves the image, or its
/// aspect differs from the query by more than kAspectTolerance.
void validate_sample(const AnnotatedSample& sample);

// One JSON object per line:
//   {"image": "...", "aspect_ratio": 1.5, "box": [cx, cy, w, h], "img_w": 160, "img_h": 160}
std::string format_annotation(const AnnotatedSample& sample);
std::vector<AnnotatedSample> parse_annotations(const std::string& text);

std::vector<AnnotatedSample> load_annotations(const std::string& path);
void save_annotations(const std::string& path, const std::vector<AnnotatedSample>& samples);

/// Resolves a sample's image path against the directory of its annotation file.
std::string resolve_image_path(const std::string& annotation_path, const std::string& image);

}  // namespace thumbseed
