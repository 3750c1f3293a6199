// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/crop.hpp"

#include <algorithm>

namespace thumbseed {

Tensor crop_and_resize(const Tensor& image, const BoxCWH& box, std::size_t out_h,
                       std::size_t out_w) {
  if (image.rank() != 3) throw InvalidArgument("crop_and_resize: image must be H x W x C");
  if (out_h == 0 || out_w == 0) throw InvalidArgument("crop_and_resize: empty output size");
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw InvalidArgument("crop_and_resize: empty box");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const double sy = box.h / static_cast<double>(out_h);
  const double sx = box.w / static_cast<double>(out_w);
  Tensor out(Shape{out_h, out_w, c});
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp(box.y0() + (static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp(box.x0() + (static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(w - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1.0 - wx) * image.at(y0, x0, ch) + wx * image.at(y0, x1, ch);
        const double bot = (1.0 - wx) * image.at(y1, x0, ch) + wx * image.at(y1, x1, ch);
        out.at(oy, ox, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

}  // namespace thumbseed
