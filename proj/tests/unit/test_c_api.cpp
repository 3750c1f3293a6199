// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "thumbseed/thumbseed.h"

namespace {

ts_model_options small_options() {
  ts_model_options o;
  ts_model_options_default(&o);
  o.resolution = 64;
  o.rpn_hidden = 16;
  o.gca_hidden = 8;
  return o;
}

struct ModelHandle {
  ts_model* m = nullptr;
  ~ModelHandle() { ts_model_free(m); }
};

}  // namespace

TEST_CASE("version, status names and defaults") {
  ts_set_quiet(1);
  CHECK(std::strlen(ts_version()) > 0);
  CHECK(std::string(ts_status_name(TS_OK)) == "ok");
  CHECK(std::string(ts_status_name(TS_ERR_DIVERGENCE)) != "");
  ts_train_options t;
  ts_train_options_default(&t);
  CHECK(t.lambda == 10.0);
  CHECK(t.lr == 0.001);
  CHECK(t.beta1 == 0.9);
  CHECK(t.beta2 == 0.999);
  CHECK(t.seed == 7);
  ts_model_options m;
  ts_model_options_default(&m);
  CHECK(m.resolution == 160);
  CHECK(m.k == 3);
  CHECK(m.rpn_hidden == 128);
  ts_dataset_options d;
  ts_dataset_options_default(&d);
  CHECK(d.n_train == 2000);
  CHECK(d.seed == 7);
}

TEST_CASE("argument errors map to status codes") {
  ts_set_quiet(1);
  CHECK(ts_model_create(nullptr, 1, nullptr) == TS_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(ts_last_error()) > 0);
  ts_model_options bad = small_options();
  bad.resolution = 50;
  ts_model* m = nullptr;
  CHECK(ts_model_create(&bad, 1, &m) == TS_ERR_INVALID_ARGUMENT);
  CHECK(m == nullptr);
  CHECK(ts_model_load("/nonexistent/model.thmb", &m) == TS_ERR_IO);
  CHECK(m == nullptr);
  ts_metrics metrics;
  ts_eval_options eo;
  ts_eval_options_default(&eo);
  CHECK(ts_evaluate(nullptr, "/nonexistent.jsonl", &eo, nullptr, &metrics) == TS_ERR_IO);
  ts_model_free(nullptr);
  ts_gradcheck_free(nullptr);
}

TEST_CASE("model lifecycle and prediction") {
  ts_set_quiet(1);
  const auto dir = test_support::scratch_dir("capi_model");
  ts_model_options o = small_options();
  ModelHandle a;
  REQUIRE(ts_model_create(&o, 3, &a.m) == TS_OK);
  uint32_t h = 0, w = 0;
  CHECK(ts_model_input_size(a.m, &h, &w) == TS_OK);
  CHECK(h == 64);
  CHECK(w == 64);
  CHECK(std::string(ts_model_config_text(a.m)).find("input_h=64") != std::string::npos);

  std::vector<float> rgb(64 * 64 * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = float((i * 37) % 255) / 255.0f;
  ts_box box;
  double score = 0;
  REQUIRE(ts_model_predict(a.m, rgb.data(), 64, 64, 1.5, &box, &score) == TS_OK);
  CHECK(score > 0.0);
  CHECK(score < 1.0);
  CHECK(box.w > 0.0);
  CHECK(ts_model_predict(a.m, rgb.data(), 64, 64, 0.0, &box, &score) == TS_ERR_INVALID_ARGUMENT);
  CHECK(ts_model_predict(a.m, nullptr, 64, 64, 1.0, &box, &score) == TS_ERR_INVALID_ARGUMENT);

  const std::string path = (dir / "m.thmb").string();
  REQUIRE(ts_model_save(a.m, path.c_str()) == TS_OK);
  ModelHandle b;
  REQUIRE(ts_model_load(path.c_str(), &b.m) == TS_OK);
  ts_box box2;
  double score2 = 0;
  REQUIRE(ts_model_predict(b.m, rgb.data(), 64, 64, 1.5, &box2, &score2) == TS_OK);
  CHECK(score2 == score);
  CHECK(box2.cx == box.cx);
  CHECK(box2.w == box.w);

  test_support::write_text(dir / "bad.thmb", "THMBjunk");
  test_support::write_text(dir / "bad.cfg", ts_model_config_text(a.m));
  ts_model* c = nullptr;
  CHECK(ts_model_load((dir / "bad.thmb").string().c_str(), &c) == TS_ERR_FORMAT);

  ts_smoothness s;
  CHECK(ts_kernel_smoothness(a.m, "box", 0.5, 2.0, 16, &s) == TS_OK);
  CHECK(s.samples == 16);
  CHECK(s.max_gap >= s.median_gap);
  CHECK(ts_kernel_smoothness(a.m, "nope", 0.5, 2.0, 16, &s) == TS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset, training, evaluation and inference") {
  ts_set_quiet(1);
  const auto dir = test_support::scratch_dir("capi_flow");
  ts_dataset_options d;
  ts_dataset_options_default(&d);
  d.n_train = 6;
  d.n_test = 3;
  d.n_holdout = 2;
  char sum1[32] = {0}, sum2[32] = {0};
  REQUIRE(ts_generate_dataset((dir / "data").string().c_str(), &d, sum1, sizeof sum1) == TS_OK);
  REQUIRE(ts_generate_dataset((dir / "data2").string().c_str(), &d, sum2, sizeof sum2) == TS_OK);
  CHECK(std::string(sum1) == std::string(sum2));
  CHECK(std::strlen(sum1) == 16);
  const std::string manifest = test_support::read_text(dir / "data" / "manifest.json");
  CHECK(manifest.find("\"seed\": 7") != std::string::npos);
  d.n_train = 0;
  CHECK(ts_generate_dataset((dir / "x").string().c_str(), &d, sum1, sizeof sum1) ==
        TS_ERR_INVALID_ARGUMENT);

  ts_model_options o = small_options();
  ModelHandle m;
  REQUIRE(ts_model_create(&o, 1, &m.m) == TS_OK);
  ts_train_options t;
  ts_train_options_default(&t);
  t.steps = 6;
  t.checkpoint_every = 0;
  t.log_every = 0;
  ts_train_summary summary;
  const std::string train_ann = (dir / "data" / "train.jsonl").string();
  REQUIRE(ts_train(m.m, train_ann.c_str(), (dir / "run").string().c_str(), &t, &summary) == TS_OK);
  CHECK(summary.steps == 6);
  CHECK(std::isfinite(summary.final_loss));
  ModelHandle loaded;
  CHECK(ts_model_load((dir / "run" / "model.thmb").string().c_str(), &loaded.m) == TS_OK);

  ts_eval_options eo;
  ts_eval_options_default(&eo);
  ts_metrics metrics;
  const std::string test_ann = (dir / "data" / "test.jsonl").string();
  REQUIRE(ts_evaluate(m.m, test_ann.c_str(), &eo, (dir / "eval").string().c_str(), &metrics) == TS_OK);
  CHECK(metrics.count == 3);
  CHECK(metrics.rf >= 1.0);
  CHECK(metrics.images_per_second > 0.0);
  for (const char* f : {"metrics.txt", "metrics.json", "per_sample.csv"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / "eval" / f), f);
  }
  eo.identity_oracle = 1;
  REQUIRE(ts_evaluate(nullptr, test_ann.c_str(), &eo, nullptr, &metrics) == TS_OK);
  CHECK(metrics.co == 0.0);
  CHECK(metrics.rf == 1.0);
  CHECK(metrics.iou == 1.0);
  CHECK(metrics.arm == 0.0);
  CHECK(metrics.hit_ratio == 1.0);
  CHECK(metrics.background_ratio == 0.0);
  eo.identity_oracle = 0;
  CHECK(ts_evaluate(nullptr, test_ann.c_str(), &eo, nullptr, &metrics) == TS_ERR_INVALID_ARGUMENT);

  const std::string image = (dir / "data" / "images" / "test_00000.ppm").string();
  const std::string thumb = (dir / "thumb.ppm").string();
  ts_box box;
  double score;
  REQUIRE(ts_infer_file(m.m, image.c_str(), 1.25, 48, 32, 1, thumb.c_str(), &box, &score) == TS_OK);
  CHECK(std::abs(box.w / box.h - 1.25) <= 1e-6);
  CHECK(test_support::read_text(thumb).rfind("P6\n48 32\n255\n", 0) == 0);
  CHECK(ts_infer_file(m.m, "/nonexistent.ppm", 1.0, 8, 8, 0, thumb.c_str(), &box, &score) == TS_ERR_IO);
}

TEST_CASE("divergence status") {
  ts_set_quiet(1);
  const auto dir = test_support::scratch_dir("capi_diverge");
  ts_dataset_options d;
  ts_dataset_options_default(&d);
  d.n_train = 3;
  d.n_test = 1;
  d.n_holdout = 1;
  REQUIRE(ts_generate_dataset((dir / "data").string().c_str(), &d, nullptr, 0) == TS_OK);
  ts_model_options o = small_options();
  ModelHandle m;
  REQUIRE(ts_model_create(&o, 1, &m.m) == TS_OK);
  ts_train_options t;
  ts_train_options_default(&t);
  t.steps = 3;
  t.log_every = 0;
  ts_debug_set_backward_fault("conv2d", std::nan(""));
  const ts_status st = ts_train(m.m, (dir / "data" / "train.jsonl").string().c_str(),
                                (dir / "run").string().c_str(), &t, nullptr);
  ts_debug_set_backward_fault(nullptr, 1.0);
  CHECK(st == TS_ERR_DIVERGENCE);
  CHECK(std::filesystem::exists(dir / "run" / "last_good.thmb"));
}
