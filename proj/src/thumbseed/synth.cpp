// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "thumbseed/image_io.hpp"
#include "thumbseed/rng.hpp"

namespace thumbseed {
namespace {

using Rgb = std::array<float, 3>;

struct Extent {
  std::size_t x0, y0, x1, y1;  // inclusive painted pixel bounds
};

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

// Paints a filled rectangle or ellipse inscribed in [x, x + w) x [y, y + h)
// and returns the painted extent.
std::optional<Extent> paint_shape(Tensor& img, std::size_t x, std::size_t y, std::size_t w,
                                  std::size_t h, bool ellipse, const Rgb& fill,
                                  const Rgb* border = nullptr, std::size_t border_px = 0) {
  std::optional<Extent> ext;
  const double cx = static_cast<double>(x) + 0.5 * static_cast<double>(w);
  const double cy = static_cast<double>(y) + 0.5 * static_cast<double>(h);
  const double rx = 0.5 * static_cast<double>(w), ry = 0.5 * static_cast<double>(h);
  for (std::size_t py = y; py < y + h && py < img.dim(0); ++py) {
    for (std::size_t px = x; px < x + w && px < img.dim(1); ++px) {
      const double dx = (static_cast<double>(px) + 0.5 - cx) / rx;
      const double dy = (static_cast<double>(py) + 0.5 - cy) / ry;
      const double r2 = dx * dx + dy * dy;
      if (ellipse && r2 > 1.0) continue;
      bool edge = false;
      if (border) {
        if (ellipse) {
          const double inner_x = std::max(rx - static_cast<double>(border_px), 1.0) / rx;
          const double inner_y = std::max(ry - static_cast<double>(border_px), 1.0) / ry;
          edge = (dx * dx) / (inner_x * inner_x) + (dy * dy) / (inner_y * inner_y) > 1.0;
        } else {
          edge = px < x + border_px || py < y + border_px || px + border_px >= x + w ||
                 py + border_px >= y + h;
        }
      }
      const Rgb& c = edge ? *border : fill;
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(py, px, ch) = c[ch];
      if (!ext) {
        ext = Extent{px, py, px, py};
      } else {
        ext->x0 = std::min(ext->x0, px);
        ext->y0 = std::min(ext->y0, py);
        ext->x1 = std::max(ext->x1, px);
        ext->y1 = std::max(ext->y1, py);
      }
    }
  }
  return ext;
}

void paint_background(Tensor& img, Rng& rng) {
  const double base = rng.uniform(0.35, 0.65);
  Rgb tint;
  for (auto& t : tint) t = static_cast<float>(rng.uniform(-0.04, 0.04));
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 3> waves;
  for (auto& wv : waves) {
    const double freq = rng.uniform(0.01, 0.06) * 2.0 * std::numbers::pi;
    const double theta = rng.uniform(0.0, std::numbers::pi);
    wv = {freq * std::cos(theta), freq * std::sin(theta), rng.uniform(0.0, 2.0 * std::numbers::pi),
          rng.uniform(0.02, 0.05)};
  }
  for (std::size_t y = 0; y < img.dim(0); ++y) {
    for (std::size_t x = 0; x < img.dim(1); ++x) {
      double v = base;
      for (const auto& wv : waves) {
        v += wv.amp * std::sin(wv.fx * static_cast<double>(x) + wv.fy * static_cast<double>(y) +
                               wv.phase);
      }
      const double noise = rng.uniform(-0.03, 0.03);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        img.at(y, x, ch) = static_cast<float>(std::clamp(v + tint[ch] + noise, 0.0, 1.0));
      }
    }
  }
}

// Offset in [0, free]: uniform when bias is 0, triangular about the middle
// when bias is 1, a mix in between.
std::size_t biased_offset(std::size_t free, double bias, Rng& rng) {
  const double u = rng.uniform();
  const double t = 0.5 * (rng.uniform() + rng.uniform());
  const double f = (1.0 - bias) * u + bias * t;
  return std::min(free, static_cast<std::size_t>(f * static_cast<double>(free + 1)));
}

}  // namespace

void SceneConfig::validate() const {
  if (canvas_w == 0 || canvas_h == 0) throw InvalidArgument("scene: empty canvas");
  if (object_min == 0 || object_min > object_max) throw InvalidArgument("scene: bad object size range");
  if (object_max > std::min(canvas_w, canvas_h)) throw InvalidArgument("scene: object larger than canvas");
  if (!(object_aspect_min > 0.0) || object_aspect_min > object_aspect_max) {
    throw InvalidArgument("scene: bad object aspect range");
  }
  if (clutter_min == 0 || clutter_min > clutter_max) throw InvalidArgument("scene: bad clutter size range");
  if (aspect_pool.empty()) throw InvalidArgument("scene: empty aspect pool");
  for (double a : aspect_pool) {
    if (!(a > 0.0)) throw InvalidArgument("scene: aspects must be positive");
  }
  if (!(center_bias >= 0.0 && center_bias <= 1.0)) throw InvalidArgument("scene: center_bias must be in [0, 1]");
  if (max_retries == 0) throw InvalidArgument("scene: max_retries must be positive");
}

std::optional<BoxCWH> expand_to_aspect(const BoxCWH& object, double aspect, double canvas_w,
                                       double canvas_h) {
  if (!(aspect > 0.0)) throw InvalidArgument("expand_to_aspect: aspect must be positive");
  double gh = std::ceil(std::max(object.h, object.w / aspect) / 4.0) * 4.0;
  while (gh * aspect < object.w) gh += 4.0;
  const double gw = gh * aspect;
  if (gw > canvas_w || gh > canvas_h) return std::nullopt;
  const double cx = std::clamp(object.cx, 0.5 * gw, canvas_w - 0.5 * gw);
  const double cy = std::clamp(object.cy, 0.5 * gh, canvas_h - 0.5 * gh);
  return BoxCWH{cx, cy, gw, gh};
}

Scene render_scene(const SceneConfig& config, std::uint64_t seed, const std::string& split,
                   std::size_t index, std::optional<double> aspect) {
  config.validate();
  Rng rng(derive_seed(seed, "scene/" + split, index));
  const double query = aspect ? *aspect : config.aspect_pool[rng.below(config.aspect_pool.size())];
  if (!(query > 0.0)) throw InvalidArgument("render_scene: aspect must be positive");
  const auto cw = static_cast<double>(config.canvas_w);
  const auto ch = static_cast<double>(config.canvas_h);

  for (std::size_t attempt = 0; attempt < config.max_retries; ++attempt) {
    // Object geometry first so rejected draws cost nothing to render.
    const double side = rng.uniform(static_cast<double>(config.object_min),
                                    static_cast<double>(config.object_max));
    const double own_aspect = std::exp(rng.uniform(std::log(config.object_aspect_min),
                                                   std::log(config.object_aspect_max)));
    const auto ow = static_cast<std::size_t>(std::clamp(std::round(side * std::sqrt(own_aspect)),
                                                        4.0, cw));
    const auto oh = static_cast<std::size_t>(std::clamp(std::round(side / std::sqrt(own_aspect)),
                                                        4.0, ch));
    const std::size_t ox = biased_offset(config.canvas_w - ow, config.center_bias, rng);
    const std::size_t oy = biased_offset(config.canvas_h - oh, config.center_bias, rng);
    const bool ellipse = rng.uniform() < 0.5;
    const BoxCWH nominal = BoxCWH::from_corners(static_cast<double>(ox), static_cast<double>(oy),
                                                static_cast<double>(ox + ow),
                                                static_cast<double>(oy + oh));
    if (!expand_to_aspect(nominal, query, cw, ch)) continue;

    Scene scene;
    scene.aspect = query;
    scene.image = Tensor(Shape{config.canvas_h, config.canvas_w, 3});
    paint_background(scene.image, rng);
    for (std::size_t i = 0; i < config.clutter_count; ++i) {
      const std::size_t w = config.clutter_min + rng.below(config.clutter_max - config.clutter_min + 1);
      const std::size_t h = config.clutter_min + rng.below(config.clutter_max - config.clutter_min + 1);
      const std::size_t x = rng.below(config.canvas_w - std::min(w, config.canvas_w) + 1);
      const std::size_t y = rng.below(config.canvas_h - std::min(h, config.canvas_h) + 1);
      const double level = rng.uniform(0.2, 0.8);
      const Rgb color{static_cast<float>(level + rng.uniform(-0.05, 0.05)),
                      static_cast<float>(level + rng.uniform(-0.05, 0.05)),
                      static_cast<float>(level + rng.uniform(-0.05, 0.05))};
      paint_shape(scene.image, x, y, w, h, rng.uniform() < 0.5, color);
    }
    const Rgb fill = hsv_to_rgb(rng.uniform(), rng.uniform(0.75, 1.0), rng.uniform(0.75, 1.0));
    const Rgb border{fill[0] * 0.4f, fill[1] * 0.4f, fill[2] * 0.4f};
    const auto ext = paint_shape(scene.image, ox, oy, ow, oh, ellipse, fill, &border, 2);
    scene.object = BoxCWH::from_corners(static_cast<double>(ext->x0), static_cast<double>(ext->y0),
                                        static_cast<double>(ext->x1 + 1),
                                        static_cast<double>(ext->y1 + 1));
    const auto gt = expand_to_aspect(scene.object, query, cw, ch);
    if (!gt) continue;
    scene.gt = *gt;
    scene.image = quantize_8bit(scene.image);
    return scene;
  }
  throw InvalidArgument("render_scene: no object fits aspect " + std::to_string(query) +
                        " after " + std::to_string(config.max_retries) + " draws");
}

std::vector<AnnotatedSample> gen_synthetic(const SceneConfig& config, std::size_t n,
                                           std::uint64_t seed, const std::string& out_dir,
                                           const std::string& split, std::optional<double> aspect) {
  if (n == 0) throw InvalidArgument("gen_synthetic: n must be at least 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw IoError("cannot create '" + out_dir + "/images': " + ec.message());
  std::vector<AnnotatedSample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Scene scene = render_scene(config, seed, split, i, aspect);
    char name[64];
    std::snprintf(name, sizeof name, "images/%s_%05zu.ppm", split.c_str(), i);
    save_image((fs::path(out_dir) / name).string(), scene.image);
    AnnotatedSample s{name, scene.aspect, scene.gt, static_cast<double>(config.canvas_w),
                      static_cast<double>(config.canvas_h)};
    validate_sample(s);
    samples.push_back(std::move(s));
  }
  save_annotations((fs::path(out_dir) / (split + ".jsonl")).string(), samples);
  return samples;
}

}  // namespace thumbseed
