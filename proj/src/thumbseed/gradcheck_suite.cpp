// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/gradcheck_suite.hpp"

#include <algorithm>
#include <chrono>
#include <functional>

#include "thumbseed/adaptive_conv.hpp"
#include "thumbseed/gca.hpp"
#include "thumbseed/gradcheck.hpp"
#include "thumbseed/init.hpp"
#include "thumbseed/loss.hpp"
#include "thumbseed/ops.hpp"
#include "thumbseed/rng.hpp"
#include "thumbseed/targets.hpp"

namespace thumbseed {
namespace {

using DTensor = BasicTensor<double>;
using DVar = Var<double>;

DTensor uniform_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  DTensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Magnitudes in [0.1, 1) with random sign, so ReLU inputs stay clear of the kink.
DTensor away_from_zero(const Shape& shape, Rng& rng) {
  DTensor t(shape);
  for (auto& v : t.data()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return t;
}

// Projects an op output onto fixed random weights so every output element
// contributes a distinct amount to the scalar.
DVar project(DVar y, Rng& rng) {
  DVar w = y.tape->leaf(uniform_tensor(y.shape(), rng, -1.0, 1.0));
  return ops::sum(ops::mul(y, w));
}

void record(const std::string& check, const std::vector<ParamCheck>& results,
            const GradCheckOptions& opt, GradCheckReport& report) {
  for (const auto& r : results) {
    report.entries.push_back({check, r.name, r.max_rel_error, r.elements, r.kinked,
                              r.max_rel_error < opt.threshold});
  }
}

struct Check {
  std::string name;
  NamedTensors<double> params;
  std::function<DVar(Tape<double>&, const ParamVars<double>&)> body;
  std::uint64_t projection_seed;
};

void run(const Check& c, const GradCheckOptions& opt, GradCheckReport& report) {
  const std::uint64_t seed = c.projection_seed;
  const LossFn loss = [&c, seed](Tape<double>& tape, const ParamVars<double>& vars) {
    Rng rng(seed);
    return project(c.body(tape, vars), rng);
  };
  record(c.name, grad_check(loss, c.params, opt.epsilon), opt, report);
}

// Scalar-output checks skip the projection.
void run_scalar(const std::string& name, const NamedTensors<double>& params, const LossFn& loss,
                const GradCheckOptions& opt, GradCheckReport& report) {
  record(name, grad_check(loss, params, opt.epsilon), opt, report);
}

std::vector<Check> op_checks(Rng& rng) {
  std::vector<Check> checks;
  auto params = [](std::initializer_list<std::pair<const char*, DTensor>> list) {
    NamedTensors<double> p;
    for (const auto& [name, t] : list) p.add(name, t);
    return p;
  };
  auto next = [&rng] { return rng.engine()(); };

  checks.push_back({"op/add", params({{"a", uniform_tensor({3, 4}, rng, -1, 1)}, {"b", uniform_tensor({3, 4}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::add(v["a"], v["b"]); }, next()});
  checks.push_back({"op/mul", params({{"a", uniform_tensor({3, 4}, rng, -1, 1)}, {"b", uniform_tensor({3, 4}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::mul(v["a"], v["b"]); }, next()});
  checks.push_back({"op/scale", params({{"a", uniform_tensor({5}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::scale(v["a"], -1.7); }, next()});
  checks.push_back({"op/relu", params({{"a", away_from_zero({4, 5}, rng)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::relu(v["a"]); }, next()});
  checks.push_back({"op/sigmoid", params({{"a", uniform_tensor({4, 5}, rng, -3, 3)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::sigmoid(v["a"]); }, next()});
  checks.push_back({"op/tanh", params({{"a", uniform_tensor({4, 5}, rng, -3, 3)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::tanh(v["a"]); }, next()});
  checks.push_back({"op/reshape", params({{"a", uniform_tensor({2, 6}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::reshape(v["a"], {3, 4}); }, next()});
  checks.push_back({"op/slice", params({{"a", uniform_tensor({12}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::slice(v["a"], 3, {2, 3}); }, next()});
  checks.push_back({"op/concat_last", params({{"a", uniform_tensor({2, 3, 2}, rng, -1, 1)}, {"b", uniform_tensor({2, 3, 3}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::concat_last(v["a"], v["b"]); }, next()});
  checks.push_back({"op/transpose01", params({{"a", uniform_tensor({2, 3, 4}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::transpose01(v["a"]); }, next()});
  checks.push_back({"op/matmul", params({{"a", uniform_tensor({3, 4}, rng, -1, 1)}, {"b", uniform_tensor({4, 5}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::matmul(v["a"], v["b"]); }, next()});
  checks.push_back({"op/linear", params({{"x", uniform_tensor({3, 4}, rng, -1, 1)}, {"w", uniform_tensor({4, 2}, rng, -1, 1)}, {"b", uniform_tensor({2}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::linear(v["x"], v["w"], v["b"]); }, next()});
  checks.push_back({"op/conv2d", params({{"x", uniform_tensor({5, 6, 2}, rng, -1, 1)}, {"k", uniform_tensor({3, 3, 2, 3}, rng, -1, 1)}, {"b", uniform_tensor({3}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::conv2d(v["x"], v["k"], v["b"], 1, Padding::Same); }, next()});
  checks.push_back({"op/conv2d_strided", params({{"x", uniform_tensor({7, 6, 2}, rng, -1, 1)}, {"k", uniform_tensor({3, 3, 2, 2}, rng, -1, 1)}, {"b", uniform_tensor({2}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::conv2d(v["x"], v["k"], v["b"], 2, Padding::Valid); }, next()});
  checks.push_back({"op/avg_pool2", params({{"x", uniform_tensor({4, 6, 2}, rng, -1, 1)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::avg_pool2(v["x"]); }, next()});
  checks.push_back({"op/softmax_rows", params({{"z", uniform_tensor({3, 5}, rng, -2, 2)}}),
                    [](Tape<double>&, const ParamVars<double>& v) { return ops::softmax_rows(v["z"]); }, next()});
  for (bool reverse : {false, true}) {
    checks.push_back({reverse ? "op/lstm_scan_reverse" : "op/lstm_scan",
                      params({{"x", uniform_tensor({2, 3, 3}, rng, -1, 1)},
                              {"wx", uniform_tensor({3, 16}, rng, -0.5, 0.5)},
                              {"wh", uniform_tensor({4, 16}, rng, -0.5, 0.5)},
                              {"b", uniform_tensor({16}, rng, -0.5, 0.5)}}),
                      [reverse](Tape<double>&, const ParamVars<double>& v) {
                        return ops::lstm_scan(v["x"], v["wx"], v["wh"], v["b"], reverse);
                      },
                      next()});
  }
  return checks;
}

void rpn_loss_check(Rng& rng, const GradCheckOptions& opt, GradCheckReport& report) {
  const AnchorGrid grid = generate_anchors(2, 2, 16.0, {8.0 * 8.0, 16.0 * 16.0, 32.0 * 32.0}, 1.0);
  const BoxCWH gt{10.0, 10.0, 14.0, 14.0};
  const TargetAssignment assign = assign_targets(grid, gt);
  Rng batch_rng(rng.engine()());
  const MiniBatch batch = sample_minibatch(assign, 256, batch_rng);
  NamedTensors<double> p;
  // Residuals near 1 would sit on the smooth-L1 seam; keep deltas small.
  p.add("deltas", uniform_tensor({2, 2, 12}, rng, -0.3, 0.3));
  p.add("logits", uniform_tensor({2, 2, 3}, rng, -2, 2));
  run_scalar("op/rpn_loss", p,
             [&](Tape<double>&, const ParamVars<double>& v) {
               return rpn_loss(v["deltas"], ops::sigmoid(v["logits"]), batch, assign, 10.0, 4);
             },
             opt, report);
}

void module_checks(Rng& rng, const GradCheckOptions& opt, GradCheckReport& report) {
  {
    // Recurrent scan plus attention on a 4 x 4 x 3 map.
    GcaConfig cfg{4, 4, 3, 4};
    ParamStore fp;
    Rng init(rng.engine()());
    init_gca_params(fp, cfg, init, 0.3);
    NamedTensors<double> p = fp.cast<double>();
    p.add("features", uniform_tensor({4, 4, 3}, rng, -1, 1));
    run({"module/gca", p,
         [cfg](Tape<double>&, const ParamVars<double>& v) { return gca_forward(v["features"], v, cfg); },
         rng.engine()()},
        opt, report);
  }
  {
    // FMN-generated 3 x 3 kernel applied to a 4 x 4 x 3 input.
    FmnConfig cfg{{3, 3, 3, 2}, {4, 6}};
    ParamStore fp;
    Rng init(rng.engine()());
    init_fmn_params(fp, "fmn", cfg, init, 0.3, 1.0);
    NamedTensors<double> p = fp.cast<double>();
    p.add("x", uniform_tensor({4, 4, 3}, rng, -1, 1));
    run({"module/adaptive_conv", p,
         [cfg](Tape<double>&, const ParamVars<double>& v) {
           return adaptive_conv(v["x"], 1.5, v, "fmn", cfg, Activation::Sigmoid);
         },
         rng.engine()()},
        opt, report);
  }
  {
    ModelConfig cfg = micro_model_config();
    const ParamStore all = init_params(cfg, rng.engine()());
    NamedTensors<double> p;
    for (const auto& name : all.names()) {
      if (name.rfind("backbone.", 0) == 0) p.add(name, all.get(name).cast<double>());
    }
    const DTensor image = uniform_tensor({cfg.input_h, cfg.input_w, 3}, rng, 0, 1);
    run({"module/backbone", p,
         [cfg, image](Tape<double>& tape, const ParamVars<double>& v) {
           return backbone_forward(tape.leaf(image), v, cfg);
         },
         rng.engine()()},
        opt, report);
  }
}

void model_check(Rng& rng, const GradCheckOptions& opt, GradCheckReport& report) {
  const ModelConfig cfg = micro_model_config();
  const NamedTensors<double> params = init_params(cfg, rng.engine()()).cast<double>();
  const DTensor image = uniform_tensor({cfg.input_h, cfg.input_w, 3}, rng, 0, 1);
  const double aspect = 2.0;
  const AnchorGrid grid = generate_anchors(cfg.feat_h(), cfg.feat_w(),
                                           static_cast<double>(cfg.stride()), cfg.anchor_areas, aspect);
  const BoxCWH gt{12.0, 20.0, 16.0, 8.0};
  const TargetAssignment assign = assign_targets(grid, gt);
  Rng batch_rng(rng.engine()());
  const MiniBatch batch = sample_minibatch(assign, 256, batch_rng);
  const std::size_t n_reg = cfg.feat_h() * cfg.feat_w();
  run_scalar("model/micro", params,
             [&](Tape<double>& tape, const ParamVars<double>& v) {
               const auto fwd = model_forward(tape, image, aspect, v, cfg);
               return rpn_loss(fwd.rpn.deltas, fwd.rpn.scores, batch, assign, 10.0, n_reg);
             },
             opt, report);
}

}  // namespace

bool GradCheckReport::passed() const {
  return !entries.empty() &&
         std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

std::vector<GradCheckEntry> GradCheckReport::failures() const {
  std::vector<GradCheckEntry> out;
  for (const auto& e : entries) {
    if (!e.pass) out.push_back(e);
  }
  return out;
}

double GradCheckReport::max_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.error);
  return m;
}

ModelConfig micro_model_config() {
  ModelConfig cfg;
  cfg.input_h = 32;
  cfg.input_w = 32;
  cfg.backbone_channels = {8, 8, 8, 8};
  cfg.gca_hidden = 16;
  cfg.rpn_hidden = 16;
  cfg.anchor_areas = {8.0 * 8.0, 16.0 * 16.0, 32.0 * 32.0};
  // Larger init keeps finite-difference signal well above truncation noise.
  cfg.init_std = 0.2;
  cfg.fmn_output_scale = 1.0;
  return cfg;
}

GradCheckReport run_gradcheck_suite(const GradCheckOptions& options) {
  if (!(options.threshold > 0.0)) throw InvalidArgument("gradcheck: threshold must be positive");
  const auto start = std::chrono::steady_clock::now();
  GradCheckReport report;
  report.threshold = options.threshold;
  Rng rng(derive_seed(options.seed, "gradcheck"));
  if (options.ops) {
    for (const auto& c : op_checks(rng)) run(c, options, report);
    rpn_loss_check(rng, options, report);
  }
  if (options.modules) module_checks(rng, options, report);
  if (options.model) model_check(rng, options, report);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace thumbseed
