// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "thumbseed/image_io.hpp"
#include "thumbseed/model.hpp"

namespace thumbseed {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

SampleMetrics thumbnail_metrics(const BoxCWH& p, const BoxCWH& g, double query_aspect) {
  if (!(p.w > 0.0 && p.h > 0.0 && g.w > 0.0 && g.h > 0.0)) {
    throw InvalidArgument("thumbnail_metrics: boxes must have positive size");
  }
  if (!(query_aspect > 0.0)) throw InvalidArgument("thumbnail_metrics: aspect must be positive");
  SampleMetrics m;
  m.co = std::hypot(p.cx - g.cx, p.cy - g.cy);
  const double sp = std::sqrt(p.area());
  const double sg = std::sqrt(g.area());
  m.rf = std::max(sp / sg, sg / sp);
  m.iou = iou(p, g);
  m.arm = std::abs(p.aspect() - query_aspect) / query_aspect;
  const double inter = intersection_area(p, g);
  m.hit = inter / g.area();
  m.background = (p.area() - inter) / p.area();
  return m;
}

std::string MetricsReport::to_text() const {
  return "count=" + std::to_string(count) + "\nCO=" + fmt(mean.co) + "\nRF=" + fmt(mean.rf) +
         "\nIoU=" + fmt(mean.iou) + "\nARM=" + fmt(mean.arm) + "\nh_r=" + fmt(mean.hit) +
         "\nb_r=" + fmt(mean.background) + "\n";
}

std::string MetricsReport::to_json() const {
  return "{\"count\": " + std::to_string(count) + ", \"CO\": " + fmt(mean.co) +
         ", \"RF\": " + fmt(mean.rf) + ", \"IoU\": " + fmt(mean.iou) + ", \"ARM\": " +
         fmt(mean.arm) + ", \"h_r\": " + fmt(mean.hit) + ", \"b_r\": " + fmt(mean.background) +
         "}\n";
}

MetricsReport aggregate_metrics(const std::vector<SampleMetrics>& samples) {
  if (samples.empty()) throw InvalidArgument("aggregate_metrics: no samples");
  MetricsReport r;
  r.count = samples.size();
  SampleMetrics s{0, 0, 0, 0, 0, 0};
  for (const auto& m : samples) {
    s.co += m.co;
    s.rf += m.rf;
    s.iou += m.iou;
    s.arm += m.arm;
    s.hit += m.hit;
    s.background += m.background;
  }
  const auto n = static_cast<double>(samples.size());
  r.mean = {s.co / n, s.rf / n, s.iou / n, s.arm / n, s.hit / n, s.background / n};
  return r;
}

double EvalResult::images_per_second() const {
  return seconds > 0.0 ? static_cast<double>(rows.size()) / seconds : 0.0;
}

std::string EvalResult::rows_csv() const {
  std::string out = "image,cx,cy,w,h,score,CO,RF,IoU,ARM,h_r,b_r\n";
  for (const auto& r : rows) {
    out += r.image + "," + fmt(r.predicted.cx) + "," + fmt(r.predicted.cy) + "," +
           fmt(r.predicted.w) + "," + fmt(r.predicted.h) + "," + fmt(r.score) + "," +
           fmt(r.metrics.co) + "," + fmt(r.metrics.rf) + "," + fmt(r.metrics.iou) + "," +
           fmt(r.metrics.arm) + "," + fmt(r.metrics.hit) + "," + fmt(r.metrics.background) +
           "\n";
  }
  return out;
}

std::size_t eval_threads_from_env() {
  const char* env = std::getenv("THUMBSEED_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw InvalidArgument("THUMBSEED_THREADS must be a positive integer");
  return static_cast<std::size_t>(v);
}

EvalResult evaluate(const Model* model, const std::vector<AnnotatedSample>& samples,
                    const std::string& annotation_path, const EvalOptions& options) {
  if (samples.empty()) throw InvalidArgument("evaluate: empty dataset");
  if (!model && !options.identity_oracle) throw InvalidArgument("evaluate: no model");
  const std::size_t threads =
      std::min(options.threads ? options.threads : eval_threads_from_env(), samples.size());

  EvalResult result;
  result.rows.resize(samples.size());
  const auto start = std::chrono::steady_clock::now();

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      try {
        const AnnotatedSample& s = samples[i];
        EvalRow& row = result.rows[i];
        row.image = s.image;
        if (options.identity_oracle) {
          row.predicted = s.box;
          row.score = 1.0;
        } else {
          const Tensor image = load_image(resolve_image_path(annotation_path, s.image));
          const Candidate c = model->best_box(image, s.aspect);
          row.predicted = clip_box(c.box, static_cast<double>(image.dim(1)),
                                   static_cast<double>(image.dim(0)));
          if (options.snap) row.predicted = snap_aspect(row.predicted, s.aspect);
          row.score = c.score;
        }
        row.metrics = thumbnail_metrics(row.predicted, s.box, s.aspect);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = samples.size();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<SampleMetrics> per;
  per.reserve(result.rows.size());
  for (const auto& r : result.rows) per.push_back(r.metrics);
  result.report = aggregate_metrics(per);
  return result;
}

}  // namespace thumbseed
