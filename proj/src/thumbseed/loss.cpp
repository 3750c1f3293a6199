// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace thumbseed {
namespace {

std::array<double, 4> as_array(const BoxDelta& d) { return {d.tx, d.ty, d.tw, d.th}; }

double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

double bce_grad(double p, int label) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  return label ? -1.0 / p : 1.0 / (1.0 - p);
}

template <typename T>
void check_inputs(const MiniBatch& batch, std::size_t n_deltas, std::size_t n_scores,
                  const TargetAssignment& targets) {
  if (n_deltas != 4 * n_scores || targets.labels.size() != n_scores) {
    throw InvalidArgument("loss: head outputs do not match the anchor assignment");
  }
  for (auto a : batch.indices) {
    if (a >= n_scores) throw InvalidArgument("loss: minibatch index out of range");
  }
  if (batch.indices.empty()) throw InvalidArgument("loss: empty minibatch");
}

}  // namespace

double smooth_l1(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double bce(double p, int label) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label ? -std::log(q) : -std::log(1.0 - q);
}

template <typename T>
LossBreakdown total_loss(const MiniBatch& batch, const BasicTensor<T>& deltas,
                         const BasicTensor<T>& scores, const TargetAssignment& targets,
                         double lambda, std::size_t n_reg) {
  check_inputs<T>(batch, deltas.size(), scores.size(), targets);
  if (n_reg == 0) throw InvalidArgument("loss: n_reg must be positive");
  LossBreakdown out;
  out.lambda = lambda;
  out.n_cls = batch.size();
  out.n_reg = n_reg;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t a = batch.indices[i];
    const bool positive = batch.labels[i] == AnchorLabel::Positive;
    out.cls += bce(scores[a], positive ? 1 : 0);
    if (!positive) continue;
    const auto target = as_array(targets.targets[a]);
    for (int c = 0; c < 4; ++c) out.reg += smooth_l1(deltas[4 * a + c] - target[c]);
  }
  out.total = out.cls / static_cast<double>(out.n_cls) +
              lambda * out.reg / static_cast<double>(out.n_reg);
  return out;
}

template <typename T>
Var<T> rpn_loss(Var<T> deltas, Var<T> scores, const MiniBatch& batch,
                const TargetAssignment& targets, double lambda, std::size_t n_reg,
                LossBreakdown* breakdown) {
  const LossBreakdown parts =
      total_loss(batch, deltas.value(), scores.value(), targets, lambda, n_reg);
  if (breakdown) *breakdown = parts;
  const int id_d = deltas.id, id_s = scores.id;
  return deltas.tape->record(
      BasicTensor<T>::scalar(static_cast<T>(parts.total)), {deltas, scores}, "rpn_loss",
      [=](Tape<T>& t, int self) {
        const double g = t.upstream(self)[0];
        const double w_cls = g / static_cast<double>(parts.n_cls);
        const double w_reg = g * lambda / static_cast<double>(n_reg);
        const auto& s = t.value(id_s);
        const auto& d = t.value(id_d);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          const std::size_t a = batch.indices[i];
          const bool positive = batch.labels[i] == AnchorLabel::Positive;
          if (t.requires_grad(id_s)) {
            t.grad_accum(id_s)[a] += static_cast<T>(w_cls * bce_grad(s[a], positive ? 1 : 0));
          }
          if (positive && t.requires_grad(id_d)) {
            const auto target = as_array(targets.targets[a]);
            auto& gd = t.grad_accum(id_d);
            for (int c = 0; c < 4; ++c) {
              gd[4 * a + c] += static_cast<T>(w_reg * smooth_l1_grad(d[4 * a + c] - target[c]));
            }
          }
        }
      });
}

#define THUMBSEED_INSTANTIATE_LOSS(T)                                                          \
  template LossBreakdown total_loss<T>(const MiniBatch&, const BasicTensor<T>&,               \
                                       const BasicTensor<T>&, const TargetAssignment&, double, \
                                       std::size_t);                                          \
  template Var<T> rpn_loss<T>(Var<T>, Var<T>, const MiniBatch&, const TargetAssignment&,      \
                              double, std::size_t, LossBreakdown*);

THUMBSEED_INSTANTIATE_LOSS(float)
THUMBSEED_INSTANTIATE_LOSS(double)

}  // namespace thumbseed
