// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/thumbseed.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "thumbseed/adaptive_conv.hpp"
#include "thumbseed/crop.hpp"
#include "thumbseed/gradcheck_suite.hpp"
#include "thumbseed/image_io.hpp"
#include "thumbseed/log.hpp"
#include "thumbseed/metrics.hpp"
#include "thumbseed/model.hpp"
#include "thumbseed/synth.hpp"
#include "thumbseed/trainer.hpp"

struct ts_model {
  thumbseed::Model model;
  std::string config_text;
};

struct ts_gradcheck_report {
  thumbseed::GradCheckReport report;
};

namespace {

namespace fs = std::filesystem;
using namespace thumbseed;

thread_local std::string t_last_error;

ts_status fail(ts_status status, const std::string& message) {
  t_last_error = message;
  return status;
}

// Runs body and maps library exceptions onto status codes.
template <typename F>
ts_status guarded(F&& body) {
  try {
    body();
    return TS_OK;
  } catch (const InvalidArgument& e) {
    return fail(TS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const FormatError& e) {
    return fail(TS_ERR_FORMAT, e.what());
  } catch (const ValidationError& e) {
    return fail(TS_ERR_VALIDATION, e.what());
  } catch (const ContractViolation& e) {
    return fail(TS_ERR_CONTRACT, e.what());
  } catch (const TrainingDivergence& e) {
    return fail(TS_ERR_DIVERGENCE, e.what());
  } catch (const IoError& e) {
    return fail(TS_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(TS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TS_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// FNV-1a, 64 bit.
struct Fnv64 {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void update(const std::uint8_t* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

ts_box from_box(const BoxCWH& b) { return {b.cx, b.cy, b.w, b.h}; }

}  // namespace

extern "C" {

const char* ts_version(void) { return "0.1.0"; }

const char* ts_last_error(void) { return t_last_error.c_str(); }

const char* ts_status_name(ts_status status) {
  switch (status) {
    case TS_OK: return "ok";
    case TS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TS_ERR_FORMAT: return "format error";
    case TS_ERR_VALIDATION: return "validation error";
    case TS_ERR_CONTRACT: return "contract violation";
    case TS_ERR_DIVERGENCE: return "training divergence";
    case TS_ERR_IO: return "i/o error";
    case TS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ts_set_quiet(int quiet) { log::set_quiet(quiet != 0); }

void ts_model_options_default(ts_model_options* o) {
  if (!o) return;
  const ModelConfig c;
  o->resolution = static_cast<std::uint32_t>(c.input_h);
  o->k = static_cast<std::uint32_t>(c.k());
  o->gca_hidden = static_cast<std::uint32_t>(c.gca_hidden);
  o->rpn_hidden = static_cast<std::uint32_t>(c.rpn_hidden);
}

void ts_train_options_default(ts_train_options* o) {
  if (!o) return;
  const TrainConfig c;
  o->steps = c.steps;
  o->lr = c.adam.lr;
  o->beta1 = c.adam.beta1;
  o->beta2 = c.adam.beta2;
  o->eps = c.adam.eps;
  o->lambda = c.lambda;
  o->seed = c.seed;
  o->checkpoint_every = c.checkpoint_every;
  o->log_every = c.log_every;
}

void ts_eval_options_default(ts_eval_options* o) {
  if (!o) return;
  o->identity_oracle = 0;
  o->snap = 0;
  o->threads = 0;
}

void ts_dataset_options_default(ts_dataset_options* o) {
  if (!o) return;
  o->n_train = 2000;
  o->n_test = 200;
  o->n_holdout = 200;
  o->seed = 7;
}

void ts_gradcheck_options_default(ts_gradcheck_options* o) {
  if (!o) return;
  const GradCheckOptions c;
  o->seed = c.seed;
  o->epsilon = c.epsilon;
  o->threshold = c.threshold;
}

ts_status ts_model_create(const ts_model_options* options, std::uint64_t seed, ts_model** out) {
  return guarded([&] {
    require(out != nullptr, "ts_model_create: out is NULL");
    *out = nullptr;
    ts_model_options o;
    ts_model_options_default(&o);
    if (options) o = *options;
    require(o.k >= 1, "ts_model_create: k must be at least 1");
    ModelConfig cfg;
    cfg.input_h = cfg.input_w = o.resolution;
    cfg.anchor_areas = default_anchor_areas(o.k);
    cfg.gca_hidden = o.gca_hidden;
    cfg.rpn_hidden = o.rpn_hidden;
    Model model = Model::initialize(cfg, seed);
    std::string text = cfg.to_text();
    *out = new ts_model{std::move(model), std::move(text)};
  });
}

ts_status ts_model_load(const char* checkpoint_path, ts_model** out) {
  return guarded([&] {
    require(out != nullptr && checkpoint_path != nullptr, "ts_model_load: NULL argument");
    *out = nullptr;
    Model model = Model::load(checkpoint_path);
    std::string text = model.config().to_text();
    *out = new ts_model{std::move(model), std::move(text)};
  });
}

ts_status ts_model_save(const ts_model* model, const char* checkpoint_path) {
  return guarded([&] {
    require(model != nullptr && checkpoint_path != nullptr, "ts_model_save: NULL argument");
    model->model.save(checkpoint_path);
  });
}

void ts_model_free(ts_model* model) { delete model; }

ts_status ts_model_input_size(const ts_model* model, std::uint32_t* height, std::uint32_t* width) {
  return guarded([&] {
    require(model != nullptr, "ts_model_input_size: model is NULL");
    if (height) *height = static_cast<std::uint32_t>(model->model.config().input_h);
    if (width) *width = static_cast<std::uint32_t>(model->model.config().input_w);
  });
}

const char* ts_model_config_text(const ts_model* model) {
  return model ? model->config_text.c_str() : "";
}

ts_status ts_model_predict(const ts_model* model, const float* rgb, std::uint32_t height,
                           std::uint32_t width, double aspect, ts_box* box, double* score) {
  return guarded([&] {
    require(model != nullptr && rgb != nullptr, "ts_model_predict: NULL argument");
    require(height > 0 && width > 0, "ts_model_predict: empty image");
    require(aspect > 0.0, "ts_model_predict: aspect must be positive");
    const std::size_t n = std::size_t{height} * width * 3;
    Tensor image(Shape{height, width, 3}, std::vector<float>(rgb, rgb + n));
    const Candidate c = model->model.best_box(image, aspect);
    if (box) *box = from_box(c.box);
    if (score) *score = c.score;
  });
}

ts_status ts_infer_file(const ts_model* model, const char* image_path, double aspect,
                        std::uint32_t out_width, std::uint32_t out_height, int snap,
                        const char* out_path, ts_box* box, double* score) {
  return guarded([&] {
    require(model != nullptr && image_path != nullptr && out_path != nullptr,
            "ts_infer_file: NULL argument");
    require(aspect > 0.0, "ts_infer_file: aspect must be positive");
    require(out_width > 0 && out_height > 0, "ts_infer_file: output size must be positive");
    const Tensor image = load_image(image_path);
    const Candidate c = model->model.best_box(image, aspect);
    BoxCWH region = clip_box(c.box, static_cast<double>(image.dim(1)),
                             static_cast<double>(image.dim(0)));
    if (snap) region = snap_aspect(region, aspect);
    save_image(out_path, crop_and_resize(image, region, out_height, out_width));
    if (box) *box = from_box(region);
    if (score) *score = c.score;
  });
}

ts_status ts_train(ts_model* model, const char* annotations_path, const char* out_dir,
                   const ts_train_options* options, ts_train_summary* summary) {
  return guarded([&] {
    require(model != nullptr && annotations_path != nullptr, "ts_train: NULL argument");
    ts_train_options o;
    ts_train_options_default(&o);
    if (options) o = *options;
    TrainConfig cfg;
    cfg.steps = o.steps;
    cfg.adam = {o.lr, o.beta1, o.beta2, o.eps};
    cfg.lambda = o.lambda;
    cfg.seed = o.seed;
    cfg.checkpoint_every = o.checkpoint_every;
    cfg.log_every = o.log_every;
    cfg.out_dir = out_dir ? out_dir : "";
    const auto samples = load_annotations(annotations_path);
    const TrainResult r = train(model->model, samples, annotations_path, cfg);
    if (summary) {
      summary->steps = r.history.size();
      summary->seconds = r.seconds;
      summary->final_loss = r.history.back().loss.total;
      summary->final_smoothed_loss = smoothed_loss(r.history, r.history.size());
    }
  });
}

ts_status ts_evaluate(const ts_model* model, const char* annotations_path,
                      const ts_eval_options* options, const char* out_dir, ts_metrics* metrics) {
  return guarded([&] {
    require(annotations_path != nullptr, "ts_evaluate: annotations path is NULL");
    ts_eval_options o;
    ts_eval_options_default(&o);
    if (options) o = *options;
    EvalOptions eo;
    eo.identity_oracle = o.identity_oracle != 0;
    eo.snap = o.snap != 0;
    eo.threads = o.threads;
    const auto samples = load_annotations(annotations_path);
    const EvalResult r = evaluate(model ? &model->model : nullptr, samples, annotations_path, eo);
    if (out_dir && *out_dir) {
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw IoError("cannot create '" + std::string(out_dir) + "': " + ec.message());
      write_text(fs::path(out_dir) / "metrics.txt", r.report.to_text());
      write_text(fs::path(out_dir) / "metrics.json", r.report.to_json());
      write_text(fs::path(out_dir) / "per_sample.csv", r.rows_csv());
    }
    if (metrics) {
      const auto& m = r.report.mean;
      *metrics = {r.report.count, m.co, m.rf, m.iou, m.arm, m.hit, m.background,
                  r.seconds, r.images_per_second()};
    }
  });
}

ts_status ts_generate_dataset(const char* out_dir, const ts_dataset_options* options,
                              char* checksum_hex, std::size_t checksum_size) {
  return guarded([&] {
    require(out_dir != nullptr && *out_dir, "ts_generate_dataset: out_dir is empty");
    ts_dataset_options o;
    ts_dataset_options_default(&o);
    if (options) o = *options;
    require(o.n_train >= 1, "ts_generate_dataset: n_train must be at least 1");
    const SceneConfig scene;
    const fs::path root(out_dir);
    Fnv64 sum;
    nlohmann::ordered_json splits = nlohmann::ordered_json::object();
    auto emit = [&](const std::string& split, std::uint64_t n, std::optional<double> aspect) {
      if (n == 0) return;
      const auto samples = gen_synthetic(scene, n, o.seed, out_dir, split, aspect);
      const auto ann = read_bytes(root / (split + ".jsonl"));
      sum.update(ann.data(), ann.size());
      for (const auto& s : samples) {
        const auto img = read_bytes(root / s.image);
        sum.update(img.data(), img.size());
      }
      splits[split] = {{"file", split + ".jsonl"}, {"count", n}};
    };
    emit("train", o.n_train, std::nullopt);
    emit("test", o.n_test, std::nullopt);
    emit("holdout", o.n_holdout, scene.holdout_aspect);

    nlohmann::ordered_json manifest;
    manifest["seed"] = o.seed;
    manifest["canvas"] = {scene.canvas_w, scene.canvas_h};
    manifest["aspect_pool"] = scene.aspect_pool;
    manifest["holdout_aspect"] = scene.holdout_aspect;
    manifest["splits"] = splits;
    manifest["checksum_fnv1a64"] = sum.hex();
    write_text(root / "manifest.json", manifest.dump(2) + "\n");
    if (checksum_hex && checksum_size > 0) {
      std::snprintf(checksum_hex, checksum_size, "%s", sum.hex().c_str());
    }
  });
}

ts_status ts_kernel_smoothness(const ts_model* model, const char* head, double lo, double hi,
                               std::uint32_t n, ts_smoothness* out) {
  return guarded([&] {
    require(model != nullptr && head != nullptr && out != nullptr,
            "ts_kernel_smoothness: NULL argument");
    const std::string h(head);
    require(h == "box" || h == "score", "ts_kernel_smoothness: head must be box or score");
    const ModelConfig& cfg = model->model.config();
    const KernelSmoothness s =
        kernel_smoothness(model->model.params(), "rpn." + h + "_fmn",
                          h == "box" ? cfg.box_fmn() : cfg.score_fmn(), lo, hi, n);
    *out = {s.max_gap, s.median_gap, static_cast<std::uint32_t>(s.aspects.size())};
  });
}

ts_status ts_gradcheck(const ts_gradcheck_options* options, ts_gradcheck_report** out) {
  return guarded([&] {
    require(out != nullptr, "ts_gradcheck: out is NULL");
    *out = nullptr;
    ts_gradcheck_options o;
    ts_gradcheck_options_default(&o);
    if (options) o = *options;
    GradCheckOptions go;
    go.seed = o.seed;
    go.epsilon = o.epsilon;
    go.threshold = o.threshold;
    *out = new ts_gradcheck_report{run_gradcheck_suite(go)};
  });
}

int ts_gradcheck_passed(const ts_gradcheck_report* r) { return r && r->report.passed() ? 1 : 0; }

std::size_t ts_gradcheck_count(const ts_gradcheck_report* r) {
  return r ? r->report.entries.size() : 0;
}

double ts_gradcheck_seconds(const ts_gradcheck_report* r) { return r ? r->report.seconds : 0.0; }

ts_status ts_gradcheck_entry(const ts_gradcheck_report* r, std::size_t index, const char** check,
                             const char** param, double* error, int* pass) {
  return guarded([&] {
    require(r != nullptr, "ts_gradcheck_entry: report is NULL");
    require(index < r->report.entries.size(), "ts_gradcheck_entry: index out of range");
    const auto& e = r->report.entries[index];
    if (check) *check = e.check.c_str();
    if (param) *param = e.param.c_str();
    if (error) *error = e.error;
    if (pass) *pass = e.pass ? 1 : 0;
  });
}

void ts_gradcheck_free(ts_gradcheck_report* r) { delete r; }

void ts_debug_set_backward_fault(const char* op, double scale) {
  debug::set_backward_fault(op ? op : "", scale);
}

}  // extern "C"
