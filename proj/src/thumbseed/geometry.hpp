// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace thumbseed {

// Axis-aligned box in center/size form, pixels.
struct BoxCWH {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double aspect() const { return w / h; }
  double area() const { return w * h; }
  double x0() const { return cx - 0.5 * w; }
  double y0() const { return cy - 0.5 * h; }
  double x1() const { return cx + 0.5 * w; }
  double y1() const { return cy + 0.5 * h; }

  static BoxCWH from_corners(double x0, double y0, double x1, double y1) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }

  bool operator==(const BoxCWH&) const = default;
};

// Regression target relative to an anchor.
struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

struct AnchorTemplate {
  double area = 0.0;
  double aspect = 1.0;
};

struct AnchorGrid {
  std::size_t feat_h = 0;
  std::size_t feat_w = 0;
  double stride = 0.0;
  std::vector<AnchorTemplate> templates;
  // Row-major over cells, template-minor: index = (i * feat_w + j) * k + t.
  std::vector<BoxCWH> anchors;

  std::size_t k() const { return templates.size(); }
  std::size_t locations() const { return feat_h * feat_w; }
};

/// Default per-location anchor areas: 128^2, 256^2 and 512^2 pixels.
std::vector<double> default_anchor_areas(std::size_t k = 3);

AnchorGrid generate_anchors(std::size_t feat_h, std::size_t feat_w, double stride,
                            const std::vector<double>& areas, double aspect);

double intersection_area(const BoxCWH& a, const BoxCWH& b);
double iou(const BoxCWH& a, const BoxCWH& b);

BoxDelta encode(const BoxCWH& gt, const BoxCWH& anchor);
BoxCWH decode(const BoxDelta& delta, const BoxCWH& anchor);

/// Clamps edges to the image; a box that collapses gets 1 px extents pinned
/// inside the image at the nearest edge.
BoxCWH clip_box(const BoxCWH& box, double img_w, double img_h);

/// Shrinks one side about the center so that w / h == aspect.
BoxCWH snap_aspect(const BoxCWH& box, double aspect);

}  // namespace thumbseed
