// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "test_support.hpp"
#include "thumbseed/annotations.hpp"
#include "thumbseed/errors.hpp"
#include "thumbseed/loss.hpp"
#include "thumbseed/metrics.hpp"
#include "thumbseed/model.hpp"
#include "thumbseed/synth.hpp"
#include "thumbseed/targets.hpp"
#include "thumbseed/trainer.hpp"

using namespace thumbseed;

namespace {

TargetAssignment labels_only(std::size_t pos, std::size_t neg, std::size_t ign = 0) {
  TargetAssignment t;
  for (std::size_t i = 0; i < pos; ++i) t.labels.push_back(AnchorLabel::Positive);
  for (std::size_t i = 0; i < neg; ++i) t.labels.push_back(AnchorLabel::Negative);
  for (std::size_t i = 0; i < ign; ++i) t.labels.push_back(AnchorLabel::Ignore);
  t.ious.assign(t.labels.size(), 0.0);
  t.targets.assign(t.labels.size(), BoxDelta{});
  return t;
}

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.input_h = cfg.input_w = 64;
  cfg.backbone_channels = {8, 8, 8, 8};
  cfg.gca_hidden = 8;
  cfg.rpn_hidden = 16;
  cfg.anchor_areas = {24.0 * 24.0, 48.0 * 48.0, 96.0 * 96.0};
  return cfg;
}

struct TinyData {
  std::filesystem::path dir;
  std::vector<AnnotatedSample> samples;
  std::string ann;
};

TinyData tiny_data(const std::string& name, std::size_t n) {
  TinyData d;
  d.dir = test_support::scratch_dir(name);
  d.samples = gen_synthetic(SceneConfig{}, n, 3, d.dir.string(), "train");
  d.ann = (d.dir / "train.jsonl").string();
  return d;
}

}  // namespace

TEST_CASE("assign_targets") {
  SUBCASE("identical anchor positive, disjoint anchor negative") {
    AnchorGrid g = generate_anchors(4, 4, 16, {32.0 * 32.0}, 1.0);
    const BoxCWH gt = g.anchors[5];
    auto t = assign_targets(g, gt);
    CHECK(t.labels[5] == AnchorLabel::Positive);
    CHECK(t.ious[5] == 1.0);
    CHECK(t.labels[15] == AnchorLabel::Negative);
    CHECK(t.targets[5].tx == 0.0);
  }
  SUBCASE("every max-IoU anchor is positive when none clears the threshold") {
    AnchorGrid g = generate_anchors(6, 6, 16, {40.0 * 40.0, 80.0 * 80.0}, 1.5);
    const BoxCWH gt{37, 51, 20, 35};
    auto t = assign_targets(g, gt);
    double best = 0;
    for (const auto& a : g.anchors) best = std::max(best, iou(a, gt));
    REQUIRE(best < 0.7);
    for (std::size_t i = 0; i < g.anchors.size(); ++i) {
      const double v = iou(g.anchors[i], gt);
      if (v == best) CHECK(t.labels[i] == AnchorLabel::Positive);
      else if (v < 0.3) CHECK(t.labels[i] == AnchorLabel::Negative);
      else CHECK(t.labels[i] == AnchorLabel::Ignore);
    }
    CHECK(t.max_iou == best);
  }
  SUBCASE("labels respect the thresholds on random boxes") {
    Rng rng(51);
    AnchorGrid g = generate_anchors(10, 10, 16, default_anchor_areas(3), 0.75);
    for (int n = 0; n < 50; ++n) {
      const BoxCWH gt{rng.uniform(20, 140), rng.uniform(20, 140), rng.uniform(30, 150),
                      rng.uniform(30, 150)};
      auto t = assign_targets(g, gt);
      std::size_t pos = 0;
      for (std::size_t i = 0; i < g.anchors.size(); ++i) {
        const double v = iou(g.anchors[i], gt);
        if (t.labels[i] == AnchorLabel::Positive) {
          ++pos;
          CHECK((v > 0.7 || v == t.max_iou));
          const BoxDelta d = encode(gt, g.anchors[i]);
          CHECK(t.targets[i].tw == d.tw);
        } else if (t.labels[i] == AnchorLabel::Negative) {
          CHECK(v < 0.3);
        }
      }
      CHECK(pos >= 1);
      CHECK(pos + t.count(AnchorLabel::Negative) + t.count(AnchorLabel::Ignore) == 300);
    }
  }
}

TEST_CASE("sample_minibatch") {
  SUBCASE("scarce positives are padded with negatives") {
    Rng rng(1);
    auto b = sample_minibatch(labels_only(5, 500), 256, rng);
    CHECK(b.size() == 256);
    CHECK(b.positives() == 5);
  }
  SUBCASE("positives capped at half") {
    Rng rng(2);
    auto b = sample_minibatch(labels_only(300, 300), 256, rng);
    CHECK(b.size() == 256);
    CHECK(b.positives() == 128);
  }
  SUBCASE("same seed, same batch; ignored anchors never sampled") {
    const auto t = labels_only(40, 400, 100);
    Rng r1(9), r2(9);
    auto a = sample_minibatch(t, 256, r1);
    auto b = sample_minibatch(t, 256, r2);
    CHECK(a.indices == b.indices);
    CHECK(a.labels == b.labels);
    std::set<std::size_t> uniq(a.indices.begin(), a.indices.end());
    CHECK(uniq.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(t.labels[a.indices[i]] == a.labels[i]);
      CHECK(a.labels[i] != AnchorLabel::Ignore);
    }
  }
  SUBCASE("composition holds for many seeds") {
    const auto t = labels_only(150, 120, 30);
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng(s);
      auto b = sample_minibatch(t, 256, rng);
      CHECK(b.size() <= 256);
      CHECK(b.positives() <= 128);
      CHECK(b.size() == 248);
    }
  }
  SUBCASE("no negatives") {
    Rng rng(3);
    CHECK_THROWS_AS(sample_minibatch(labels_only(10, 0, 5), 256, rng), ContractViolation);
  }
}

TEST_CASE("smooth_l1 and bce") {
  CHECK(smooth_l1(0.0) == 0.0);
  CHECK(smooth_l1(0.5) == 0.125);
  CHECK(smooth_l1(2.0) == 1.5);
  CHECK(smooth_l1(-2.0) == 1.5);
  CHECK(smooth_l1(1.0) == 0.5);
  CHECK(bce(1.0, 1) <= 1.2e-7);
  CHECK(bce(0.0, 0) <= 1.2e-7);
  CHECK(bce(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (double p : {0.01, 0.2, 0.7, 0.999}) CHECK(bce(p, 1) == doctest::Approx(bce(1 - p, 0)));
  CHECK(std::isfinite(bce(0.0, 1)));
}

TEST_CASE("total_loss") {
  const std::size_t n = 20;
  TargetAssignment t = labels_only(4, 16);
  for (std::size_t i = 0; i < 4; ++i) t.targets[i] = {0.1 * double(i), -0.2, 0.3, 1.5};
  MiniBatch batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.indices.push_back(i);
    batch.labels.push_back(t.labels[i]);
  }
  SUBCASE("all-0.5 scores and no positives give ln 2") {
    MiniBatch neg;
    for (std::size_t i = 4; i < n; ++i) {
      neg.indices.push_back(i);
      neg.labels.push_back(AnchorLabel::Negative);
    }
    BasicTensor<double> scores(Shape{n}, 0.5), deltas(Shape{4 * n}, 0.3);
    auto l = total_loss(neg, deltas, scores, t, 10.0, 100);
    CHECK(std::abs(l.total - std::log(2.0)) <= 1e-6);
    CHECK(l.reg == 0.0);
    CHECK(l.n_cls == 16);
  }
  SUBCASE("perfect predictions give zero") {
    BasicTensor<double> scores(Shape{n}), deltas(Shape{4 * n});
    for (std::size_t i = 0; i < n; ++i) scores[i] = i < 4 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      deltas[4 * i] = t.targets[i].tx;
      deltas[4 * i + 1] = t.targets[i].ty;
      deltas[4 * i + 2] = t.targets[i].tw;
      deltas[4 * i + 3] = t.targets[i].th;
    }
    auto l = total_loss(batch, deltas, scores, t, 10.0, 100);
    CHECK(l.total <= 1e-6);
    CHECK(l.total >= 0.0);
  }
  SUBCASE("hand-evaluated mixture and linearity in lambda") {
    BasicTensor<double> scores(Shape{n}, 0.25), deltas(Shape{4 * n});
    double cls = 0, reg = 0;
    for (std::size_t i = 0; i < n; ++i) cls += i < 4 ? -std::log(0.25) : -std::log(0.75);
    for (std::size_t i = 0; i < 4; ++i) {
      for (double v : {t.targets[i].tx, t.targets[i].ty, t.targets[i].tw, t.targets[i].th}) {
        reg += std::abs(v) < 1 ? 0.5 * v * v : std::abs(v) - 0.5;
      }
    }
    auto l1 = total_loss(batch, deltas, scores, t, 10.0, 100);
    CHECK(l1.cls == doctest::Approx(cls).epsilon(1e-12));
    CHECK(l1.reg == doctest::Approx(reg).epsilon(1e-12));
    CHECK(l1.total == doctest::Approx(cls / 20 + 10.0 * reg / 100).epsilon(1e-12));
    auto l2 = total_loss(batch, deltas, scores, t, 20.0, 100);
    CHECK(l2.reg == l1.reg);
    CHECK(l2.cls == l1.cls);
    CHECK(l2.lambda * l2.reg / double(l2.n_reg) == 2.0 * (l1.lambda * l1.reg / double(l1.n_reg)));
  }
  SUBCASE("tape loss matches and differentiates") {
    Rng rng(5);
    BasicTensor<double> scores(Shape{n}), deltas(Shape{4 * n});
    for (auto& v : scores.data()) v = rng.uniform(0.05, 0.95);
    for (auto& v : deltas.data()) v = rng.uniform(-2, 2);
    Tape<double> tape;
    Var<double> d = tape.leaf(deltas, true), s = tape.leaf(scores, true);
    LossBreakdown parts;
    Var<double> l = rpn_loss(d, s, batch, t, 10.0, 100, &parts);
    CHECK(l.value().item() == doctest::Approx(total_loss(batch, deltas, scores, t, 10.0, 100).total));
    CHECK(parts.total == doctest::Approx(l.value().item()));
    tape.backward(l);
    auto gs = tape.grad(s);
    CHECK(gs[0] == doctest::Approx(-1.0 / scores[0] / 20));
    CHECK(gs[10] == doctest::Approx(1.0 / (1.0 - scores[10]) / 20));
    auto gd = tape.grad(d);
    for (std::size_t k = 16; k < 4 * n; ++k) CHECK(gd[k] == 0.0);
  }
  SUBCASE("bad inputs") {
    BasicTensor<double> scores(Shape{n}), deltas(Shape{4 * n - 1});
    CHECK_THROWS_AS(total_loss(batch, deltas, scores, t, 10.0, 100), InvalidArgument);
  }
}

TEST_CASE("thumbnail metrics") {
  const BoxCWH g{50, 60, 40, 20};
  SUBCASE("perfect prediction") {
    auto m = thumbnail_metrics(g, g, 2.0);
    CHECK(m.co == 0.0);
    CHECK(m.rf == 1.0);
    CHECK(m.iou == 1.0);
    CHECK(m.arm == 0.0);
    CHECK(m.hit == 1.0);
    CHECK(m.background == 0.0);
  }
  SUBCASE("prediction scaled by two about the center") {
    auto m = thumbnail_metrics(BoxCWH{50, 60, 80, 40}, g, 2.0);
    CHECK(m.rf == doctest::Approx(2.0));
    CHECK(m.hit == doctest::Approx(1.0));
    CHECK(m.background == doctest::Approx(0.75));
    CHECK(m.iou == doctest::Approx(0.25));
    CHECK(m.co == 0.0);
  }
  SUBCASE("offset and aspect mismatch") {
    auto m = thumbnail_metrics(BoxCWH{53, 64, 30, 20}, g, 2.0);
    CHECK(m.co == doctest::Approx(5.0));
    CHECK(m.arm == doctest::Approx(0.25));
    CHECK(m.rf == doctest::Approx(std::sqrt(800.0 / 600.0)));
  }
  SUBCASE("aggregate means and report text") {
    std::vector<SampleMetrics> s{thumbnail_metrics(g, g, 2.0),
                                 thumbnail_metrics(BoxCWH{50, 60, 80, 40}, g, 2.0)};
    auto r = aggregate_metrics(s);
    CHECK(r.count == 2);
    CHECK(r.mean.rf == doctest::Approx(1.5));
    CHECK(r.mean.iou == doctest::Approx(0.625));
    const std::string text = r.to_text();
    CHECK(text.find("count=2\n") == 0);
    for (const char* key : {"CO=", "RF=", "IoU=", "ARM=", "h_r=", "b_r="}) {
      CHECK(text.find(key) != std::string::npos);
    }
    CHECK(r.to_json().find("\"count\": 2") != std::string::npos);
  }
}

TEST_CASE("evaluate") {
  const TinyData d = tiny_data("eval_data", 6);
  SUBCASE("identity oracle is exact") {
    EvalOptions o;
    o.identity_oracle = true;
    auto r = evaluate(nullptr, d.samples, d.ann, o);
    CHECK(r.report.count == 6);
    CHECK(r.report.mean.co == 0.0);
    CHECK(r.report.mean.rf == 1.0);
    CHECK(r.report.mean.iou == 1.0);
    CHECK(r.report.mean.arm == 0.0);
    CHECK(r.report.mean.hit == 1.0);
    CHECK(r.report.mean.background == 0.0);
  }
  SUBCASE("model evaluation is independent of the worker count") {
    Model m = Model::initialize(small_model(), 4);
    EvalOptions one, three;
    one.threads = 1;
    three.threads = 3;
    auto a = evaluate(&m, d.samples, d.ann, one);
    auto b = evaluate(&m, d.samples, d.ann, three);
    CHECK(a.report.to_text() == b.report.to_text());
    CHECK(a.rows_csv() == b.rows_csv());
    CHECK(a.report.count == 6);
    for (const auto& row : a.rows) {
      CHECK(row.predicted.x0() >= 0.0);
      CHECK(row.predicted.x1() <= 160.0);
    }
    EvalOptions snap;
    snap.snap = true;
    auto s = evaluate(&m, d.samples, d.ann, snap);
    CHECK(s.report.mean.arm <= 1e-6);
  }
  SUBCASE("empty set") {
    CHECK_THROWS_AS(evaluate(nullptr, {}, d.ann, EvalOptions{true}), InvalidArgument);
  }
}

TEST_CASE("training") {
  const TinyData d = tiny_data("train_data", 5);
  TrainConfig cfg;
  CHECK(cfg.lambda == 10.0);
  CHECK(cfg.adam.lr == 0.001);
  CHECK(cfg.adam.beta1 == 0.9);
  CHECK(cfg.adam.beta2 == 0.999);
  CHECK(cfg.batch_size == 256);
  cfg.steps = 12;
  cfg.checkpoint_every = 5;
  cfg.log_every = 0;

  SUBCASE("writes checkpoints and a loss history, deterministically") {
    const auto out1 = test_support::scratch_dir("train_run1");
    const auto out2 = test_support::scratch_dir("train_run2");
    Model m1 = Model::initialize(small_model(), 1);
    Model m2 = Model::initialize(small_model(), 1);
    cfg.out_dir = out1.string();
    auto r1 = train(m1, d.samples, d.ann, cfg);
    cfg.out_dir = out2.string();
    auto r2 = train(m2, d.samples, d.ann, cfg);
    REQUIRE(r1.history.size() == 12);
    for (const auto& rec : r1.history) {
      CHECK(std::isfinite(rec.loss.total));
      CHECK(rec.loss.total == doctest::Approx(rec.loss.cls / rec.loss.n_cls +
                                              10.0 * rec.loss.reg / rec.loss.n_reg));
    }
    for (const char* f : {"ckpt_000005.thmb", "ckpt_000010.thmb", "model.thmb", "model.cfg", "loss.csv"}) {
      CHECK_MESSAGE(std::filesystem::exists(out1 / f), f);
    }
    CHECK(test_support::read_bytes(out1 / "model.thmb") == test_support::read_bytes(out2 / "model.thmb"));
    CHECK(test_support::read_text(out1 / "loss.csv") == test_support::read_text(out2 / "loss.csv"));
    CHECK(test_support::read_text(out1 / "loss.csv").rfind("step,total,cls,reg\n", 0) == 0);
    Model back = Model::load((out1 / "model.thmb").string());
    CHECK(back.params() == m1.params());
    CHECK_FALSE(m1.params() == Model::initialize(small_model(), 1).params());
  }
  SUBCASE("non-finite gradients abort and keep the last good parameters") {
    const auto out = test_support::scratch_dir("train_diverge");
    cfg.out_dir = out.string();
    Model m = Model::initialize(small_model(), 1);
    debug::set_backward_fault("conv2d", std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(train(m, d.samples, d.ann, cfg), TrainingDivergence);
    debug::set_backward_fault("", 1.0);
    CHECK(std::filesystem::exists(out / "last_good.thmb"));
    CHECK(Model::load((out / "last_good.thmb").string()).params() == m.params());
  }
  SUBCASE("empty dataset") {
    Model m = Model::initialize(small_model(), 1);
    CHECK_THROWS_AS(train(m, {}, d.ann, cfg), InvalidArgument);
  }
}

TEST_CASE("smoothed loss") {
  std::vector<LossRecord> h;
  for (std::size_t s = 1; s <= 100; ++s) {
    LossRecord r;
    r.step = s;
    r.loss.total = double(s);
    h.push_back(r);
  }
  CHECK(smoothed_loss(h, 50) == doctest::Approx(25.5));
  CHECK(smoothed_loss(h, 100) == doctest::Approx(75.5));
  CHECK(smoothed_loss(h, 10) == doctest::Approx(5.5));
  CHECK(loss_history_csv(h).rfind("step,total,cls,reg\n1,", 0) == 0);
}
