// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "thumbseed/geometry.hpp"
#include "thumbseed/rng.hpp"

namespace thumbseed {

enum class AnchorLabel : std::int8_t { Negative = 0, Positive = 1, Ignore = -1 };

struct AssignmentThresholds {
  double positive = 0.7;
  double negative = 0.3;
};

struct TargetAssignment {
  std::vector<AnchorLabel> labels;
  std::vector<double> ious;
  // Encoded ground truth per anchor; meaningful for positives only.
  std::vector<BoxDelta> targets;
  double max_iou = 0.0;

  std::size_t count(AnchorLabel label) const;
};

/// Positive when IoU > positive threshold or when the anchor attains the
/// maximum IoU (all tied anchors); negative when IoU < negative threshold;
/// ignored otherwise.
TargetAssignment assign_targets(const AnchorGrid& anchors, const BoxCWH& gt,
                                const AssignmentThresholds& thresholds = {});

struct MiniBatch {
  std::vector<std::size_t> indices;  // ascending anchor indices
  std::vector<AnchorLabel> labels;

  std::size_t size() const { return indices.size(); }
  std::size_t positives() const;
};

/// Up to size / 2 positives, the rest negatives, each drawn uniformly
/// without replacement. Throws ContractViolation when there are no negatives.
MiniBatch sample_minibatch(const TargetAssignment& assignment, std::size_t size, Rng& rng);

}  // namespace thumbseed
