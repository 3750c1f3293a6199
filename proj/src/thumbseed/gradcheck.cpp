// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace thumbseed {
namespace {

double evaluate(const LossFn& loss, const NamedTensors<double>& params,
                debug::ActivationProbe* probe = nullptr) {
  struct ProbeScope {
    explicit ProbeScope(debug::ActivationProbe* p) { debug::set_activation_probe(p); }
    ~ProbeScope() { debug::set_activation_probe(nullptr); }
  } scope(probe);
  if (probe) probe->recorded.clear();
  Tape<double> tape;
  ParamVars<double> vars(tape, params, false);
  const double value = loss(tape, vars).value().item();
  if (probe && probe->replay && probe->recorded.size() != probe->replay->size()) {
    throw ContractViolation("grad_check: activation count changed under perturbation");
  }
  return value;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

std::vector<ParamCheck> grad_check(const LossFn& loss, const NamedTensors<double>& params,
                                   double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("grad_check: epsilon must be positive");

  NamedTensors<double> analytic;
  double base = 0.0;
  {
    Tape<double> tape;
    ParamVars<double> vars(tape, params, true);
    Var<double> out = loss(tape, vars);
    base = out.value().item();
    tape.backward(out);
    analytic = vars.gradients();
  }
  // Probes run with every ReLU gated on its sign at the unperturbed point, so
  // a perturbation that crosses a kink still measures the derivative there.
  debug::ActivationProbe base_probe;
  if (evaluate(loss, params, &base_probe) != base) {
    throw ContractViolation("grad_check: forward function is not deterministic");
  }

  debug::ActivationProbe frozen;
  frozen.replay = &base_probe.recorded;
  NamedTensors<double> probe = params;
  std::vector<ParamCheck> report;
  for (const auto& name : params.names()) {
    ParamCheck check{name, 0.0, params.get(name).size()};
    BasicTensor<double>& p = probe.get(name);
    const BasicTensor<double>& g = analytic.get(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + epsilon;
      const double up = evaluate(loss, probe, &frozen);
      bool kink = frozen.recorded != base_probe.recorded;
      p[i] = saved - epsilon;
      const double down = evaluate(loss, probe, &frozen);
      kink = kink || frozen.recorded != base_probe.recorded;
      p[i] = saved;
      if (kink) ++check.kinked;
      check.max_rel_error =
          std::max(check.max_rel_error, relative_error(g[i], (up - down) / (2.0 * epsilon)));
    }
    report.push_back(check);
  }
  return report;
}

}  // namespace thumbseed
