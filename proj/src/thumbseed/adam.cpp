// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/adam.hpp"

#include <algorithm>
#include <cmath>

namespace thumbseed {

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               const AdamConfig& config) {
  for (const auto& name : params.names()) {
    const Tensor& g = grads.get(name);
    if (g.shape() != params.get(name).shape()) {
      throw InvalidArgument("adam: gradient shape " + shape_str(g.shape()) +
                            " does not match parameter '" + name + "'");
    }
    if (!g.all_finite()) throw TrainingDivergence("non-finite gradient for '" + name + "'");
  }

  const std::uint64_t step = ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));

  for (const auto& name : params.names()) {
    const Tensor& g = grads.get(name);
    if (std::all_of(g.data().begin(), g.data().end(), [](float v) { return v == 0.0f; })) continue;
    Tensor& p = params.get(name);
    if (!state.m.contains(name)) {
      state.m.add(name, Tensor(p.shape()));
      state.v.add(name, Tensor(p.shape()));
    }
    Tensor& m = state.m.get(name);
    Tensor& v = state.v.get(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = config.beta1 * m[i] + (1.0 - config.beta1) * gi;
      const double vi = config.beta2 * v[i] + (1.0 - config.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = config.lr * (mi / c1) / (std::sqrt(vi / c2) + config.eps);
      p[i] = static_cast<float>(p[i] - update);
    }
  }
}

}  // namespace thumbseed
