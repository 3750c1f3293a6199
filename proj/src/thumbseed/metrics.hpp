// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "thumbseed/annotations.hpp"
#include "thumbseed/geometry.hpp"

namespace thumbseed {

class Model;

// Per-sample thumbnail quality of a predicted box P against ground truth G.
struct SampleMetrics {
  double co = 0.0;   // center offset, pixels
  double rf = 1.0;   // rescaling factor, max(sP / sG, sG / sP) with s = sqrt(area)
  double iou = 0.0;
  double arm = 0.0;  // |aspect(P) - query| / query
  double hit = 0.0;  // area(P n G) / area(G)
  double background = 0.0;  // area(P \ G) / area(P)
};

SampleMetrics thumbnail_metrics(const BoxCWH& predicted, const BoxCWH& gt, double query_aspect);

struct MetricsReport {
  SampleMetrics mean;
  std::size_t count = 0;

  /// key=value lines, fixed order.
  std::string to_text() const;
  std::string to_json() const;
};

/// Means accumulated in the given order.
MetricsReport aggregate_metrics(const std::vector<SampleMetrics>& samples);

struct EvalOptions {
  bool identity_oracle = false;  // P := G, no model needed
  bool snap = false;             // enforce the query aspect exactly after clipping
  std::size_t threads = 0;       // 0: THUMBSEED_THREADS or 1
};

struct EvalRow {
  std::string image;
  BoxCWH predicted;
  double score = 0.0;
  SampleMetrics metrics;
};

struct EvalResult {
  MetricsReport report;
  std::vector<EvalRow> rows;
  double seconds = 0.0;
  double images_per_second() const;
  /// CSV with a header line.
  std::string rows_csv() const;
};

/// Scores every sample with the argmax-score clipped box. Image paths are
/// resolved against annotation_path. Throws InvalidArgument when empty.
EvalResult evaluate(const Model* model, const std::vector<AnnotatedSample>& samples,
                    const std::string& annotation_path, const EvalOptions& options = {});

/// Worker count from THUMBSEED_THREADS, at least 1.
std::size_t eval_threads_from_env();

}  // namespace thumbseed
