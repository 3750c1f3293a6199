// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "thumbseed/errors.hpp"

namespace thumbseed {

std::vector<double> default_anchor_areas(std::size_t k) {
  std::vector<double> areas;
  double side = 128.0;
  for (std::size_t t = 0; t < k; ++t, side *= 2.0) areas.push_back(side * side);
  return areas;
}

AnchorGrid generate_anchors(std::size_t feat_h, std::size_t feat_w, double stride,
                            const std::vector<double>& areas, double aspect) {
  if (!(aspect > 0.0)) throw InvalidArgument("anchors: aspect must be positive");
  if (areas.empty()) throw InvalidArgument("anchors: at least one area is required");
  if (!(stride > 0.0)) throw InvalidArgument("anchors: stride must be positive");
  AnchorGrid grid{feat_h, feat_w, stride, {}, {}};
  for (double a : areas) {
    if (!(a > 0.0)) throw InvalidArgument("anchors: area must be positive, got " + std::to_string(a));
    grid.templates.push_back({a, aspect});
  }
  grid.anchors.reserve(feat_h * feat_w * areas.size());
  for (std::size_t i = 0; i < feat_h; ++i) {
    for (std::size_t j = 0; j < feat_w; ++j) {
      const double cx = (static_cast<double>(j) + 0.5) * stride;
      const double cy = (static_cast<double>(i) + 0.5) * stride;
      for (const auto& t : grid.templates) {
        grid.anchors.push_back({cx, cy, std::sqrt(t.area * aspect), std::sqrt(t.area / aspect)});
      }
    }
  }
  return grid;
}

double intersection_area(const BoxCWH& a, const BoxCWH& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const BoxCWH& a, const BoxCWH& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

BoxDelta encode(const BoxCWH& gt, const BoxCWH& anchor) {
  return {(gt.cx - anchor.cx) / anchor.w, (gt.cy - anchor.cy) / anchor.h,
          std::log(gt.w / anchor.w), std::log(gt.h / anchor.h)};
}

BoxCWH decode(const BoxDelta& d, const BoxCWH& anchor) {
  return {anchor.cx + d.tx * anchor.w, anchor.cy + d.ty * anchor.h, anchor.w * std::exp(d.tw),
          anchor.h * std::exp(d.th)};
}

namespace {

// One axis of clip_box: returns {center, size}. Untouched extents are passed
// through so that rounding in the corner form cannot grow the box.
std::pair<double, double> clip_axis(double c, double s, double limit) {
  const double lo = c - 0.5 * s;
  const double hi = c + 0.5 * s;
  if (lo >= 0.0 && hi <= limit) return {c, s};
  double a = std::clamp(lo, 0.0, limit);
  double b = std::clamp(hi, 0.0, limit);
  if (b - a < 1.0) {
    a = std::clamp(a, 0.0, limit - 1.0);
    return {a + 0.5, 1.0};
  }
  return {0.5 * (a + b), std::min(b - a, s)};
}

}  // namespace

BoxCWH clip_box(const BoxCWH& box, double img_w, double img_h) {
  const auto [cx, w] = clip_axis(box.cx, box.w, img_w);
  const auto [cy, h] = clip_axis(box.cy, box.h, img_h);
  return {cx, cy, w, h};
}

BoxCWH snap_aspect(const BoxCWH& box, double aspect) {
  if (!(aspect > 0.0)) throw InvalidArgument("snap_aspect: aspect must be positive");
  BoxCWH out = box;
  if (box.w / box.h > aspect) {
    out.w = box.h * aspect;
  } else {
    out.h = box.w / aspect;
  }
  return out;
}

}  // namespace thumbseed
