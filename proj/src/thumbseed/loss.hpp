// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "thumbseed/tape.hpp"
#include "thumbseed/targets.hpp"

namespace thumbseed {

inline constexpr double kProbabilityClamp = 1e-7;

double smooth_l1(double x);

/// Binary cross entropy with p clamped to [1e-7, 1 - 1e-7].
double bce(double p, int label);

// cls and reg are raw sums; total = cls / n_cls + lambda * reg / n_reg.
struct LossBreakdown {
  double total = 0.0;
  double cls = 0.0;
  double reg = 0.0;
  double lambda = 0.0;
  std::size_t n_cls = 0;
  std::size_t n_reg = 0;
};

/// Classification over every sampled anchor (n_cls = batch size) plus
/// smooth-L1 box regression over the sampled positives, normalized by n_reg
/// (the number of anchor locations).
template <typename T>
LossBreakdown total_loss(const MiniBatch& batch, const BasicTensor<T>& deltas,
                         const BasicTensor<T>& scores, const TargetAssignment& targets,
                         double lambda, std::size_t n_reg);

/// Same loss recorded on the tape, differentiable in deltas and scores.
template <typename T>
Var<T> rpn_loss(Var<T> deltas, Var<T> scores, const MiniBatch& batch,
                const TargetAssignment& targets, double lambda, std::size_t n_reg,
                LossBreakdown* breakdown = nullptr);

}  // namespace thumbseed
