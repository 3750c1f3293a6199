// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thumbseed/adam.hpp"
#include "thumbseed/annotations.hpp"
#include "thumbseed/loss.hpp"
#include "thumbseed/model.hpp"

namespace thumbseed {

struct TrainConfig {
  std::size_t steps = 5000;
  AdamConfig adam;
  double lambda = 10.0;
  std::uint64_t seed = 7;
  std::size_t batch_size = 256;
  std::size_t checkpoint_every = 500;  // 0 disables periodic checkpoints
  std::string out_dir;                 // empty: nothing written
  std::size_t log_every = 100;

  void validate() const;
};

struct LossRecord {
  std::size_t step = 0;  // 1-based
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<LossRecord> history;
  double seconds = 0.0;
};

/// step,total,cls,reg with a header line.
std::string loss_history_csv(const std::vector<LossRecord>& history);

/// Mean total loss over the `window` steps ending at `step` (1-based), or
/// fewer when the history is shorter than the window.
double smoothed_loss(const std::vector<LossRecord>& history, std::size_t step,
                     std::size_t window = 50);

/// One sample per step, visited in a per-epoch shuffled order. Writes
/// periodic checkpoints, the final model.thmb and loss.csv under out_dir.
/// A non-finite loss or gradient throws TrainingDivergence after saving the
/// parameters from before that step as last_good.thmb.
TrainResult train(Model& model, const std::vector<AnnotatedSample>& samples,
                  const std::string& annotation_path, const TrainConfig& config);

}  // namespace thumbseed
