// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/targets.hpp"

#include <algorithm>
#include <cmath>

#include "thumbseed/errors.hpp"

namespace thumbseed {
namespace {

// Partial Fisher-Yates: the first k entries become a uniform sample.
std::vector<std::size_t> choose(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

std::size_t TargetAssignment::count(AnchorLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

TargetAssignment assign_targets(const AnchorGrid& anchors, const BoxCWH& gt,
                                const AssignmentThresholds& thresholds) {
  const std::size_t n = anchors.anchors.size();
  TargetAssignment out{std::vector<AnchorLabel>(n, AnchorLabel::Ignore), std::vector<double>(n),
                       std::vector<BoxDelta>(n), 0.0};
  for (std::size_t a = 0; a < n; ++a) {
    out.ious[a] = iou(anchors.anchors[a], gt);
    out.max_iou = std::max(out.max_iou, out.ious[a]);
  }
  for (std::size_t a = 0; a < n; ++a) {
    const double v = out.ious[a];
    const bool best = out.max_iou > 0.0 && std::abs(v - out.max_iou) <= 1e-12;
    if (v > thresholds.positive || best) {
      out.labels[a] = AnchorLabel::Positive;
      out.targets[a] = encode(gt, anchors.anchors[a]);
    } else if (v < thresholds.negative) {
      out.labels[a] = AnchorLabel::Negative;
    }
  }
  return out;
}

std::size_t MiniBatch::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), AnchorLabel::Positive));
}

MiniBatch sample_minibatch(const TargetAssignment& assignment, std::size_t size, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t a = 0; a < assignment.labels.size(); ++a) {
    if (assignment.labels[a] == AnchorLabel::Positive) pos.push_back(a);
    if (assignment.labels[a] == AnchorLabel::Negative) neg.push_back(a);
  }
  if (neg.empty()) throw ContractViolation("sample_minibatch: no negative anchors to sample");
  std::vector<std::size_t> picked = choose(std::move(pos), size / 2, rng);
  const std::size_t n_pos = picked.size();
  const auto negs = choose(std::move(neg), size - n_pos, rng);
  picked.insert(picked.end(), negs.begin(), negs.end());
  std::sort(picked.begin(), picked.end());
  MiniBatch batch;
  batch.indices = std::move(picked);
  for (auto a : batch.indices) batch.labels.push_back(assignment.labels[a]);
  return batch;
}

}  // namespace thumbseed
