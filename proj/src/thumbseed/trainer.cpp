// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "thumbseed/image_io.hpp"
#include "thumbseed/log.hpp"
#include "thumbseed/ops.hpp"
#include "thumbseed/rng.hpp"
#include "thumbseed/targets.hpp"

namespace thumbseed {
namespace {

namespace fs = std::filesystem;

struct PreparedSample {
  Tensor image;
  BoxCWH gt;
  double aspect;
};

// Brings a sample to the model resolution, rescaling box and aspect with it.
PreparedSample prepare(const AnnotatedSample& s, const std::string& annotation_path,
                       const ModelConfig& cfg) {
  Tensor image = load_image(resolve_image_path(annotation_path, s.image));
  const double sx = static_cast<double>(cfg.input_w) / static_cast<double>(image.dim(1));
  const double sy = static_cast<double>(cfg.input_h) / static_cast<double>(image.dim(0));
  if (sx == 1.0 && sy == 1.0) return {std::move(image), s.box, s.aspect};
  return {bilinear_resize(image, cfg.input_h, cfg.input_w),
          BoxCWH{s.box.cx * sx, s.box.cy * sy, s.box.w * sx, s.box.h * sy}, s.aspect * sx / sy};
}

std::string checkpoint_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06zu.thmb", step);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void TrainConfig::validate() const {
  if (steps == 0) throw InvalidArgument("train: steps must be at least 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw InvalidArgument("train: lr must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("train: lambda must be >= 0");
  if (batch_size < 2) throw InvalidArgument("train: batch size must be at least 2");
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::string out = "step,total,cls,reg\n";
  char buf[128];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", r.step, r.loss.total, r.loss.cls,
                  r.loss.reg);
    out += buf;
  }
  return out;
}

double smoothed_loss(const std::vector<LossRecord>& history, std::size_t step,
                     std::size_t window) {
  if (step == 0 || step > history.size() || window == 0) {
    throw InvalidArgument("smoothed_loss: step out of range");
  }
  const std::size_t first = step >= window ? step - window : 0;
  double sum = 0.0;
  for (std::size_t i = first; i < step; ++i) sum += history[i].loss.total;
  return sum / static_cast<double>(step - first);
}

TrainResult train(Model& model, const std::vector<AnnotatedSample>& samples,
                  const std::string& annotation_path, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw InvalidArgument("train: empty dataset");
  const ModelConfig& mcfg = model.config();
  const bool writes = !config.out_dir.empty();
  if (writes) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create '" + config.out_dir + "': " + ec.message());
  }
  const fs::path out(config.out_dir);
  const auto n_reg = mcfg.feat_h() * mcfg.feat_w();

  TrainResult result;
  result.history.reserve(config.steps);
  AdamState adam;
  std::vector<std::size_t> order(samples.size());
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t step = 1; step <= config.steps; ++step) {
    const std::size_t epoch = (step - 1) / samples.size();
    const std::size_t pos = (step - 1) % samples.size();
    if (pos == 0) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle_rng(derive_seed(config.seed, "order", epoch));
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.below(i)]);
      }
    }
    const PreparedSample sample = prepare(samples[order[pos]], annotation_path, mcfg);

    Tape<float> tape;
    const ParamVars<float> vars(tape, model.params());
    const ForwardVars<float> fwd = model_forward(tape, sample.image, sample.aspect, vars, mcfg);
    const TargetAssignment assignment = assign_targets(model.anchors(sample.aspect), sample.gt);
    Rng batch_rng(derive_seed(config.seed, "minibatch", step));
    const MiniBatch batch = sample_minibatch(assignment, config.batch_size, batch_rng);
    LossBreakdown parts;
    const Var<float> loss = rpn_loss(fwd.rpn.deltas, fwd.rpn.scores, batch, assignment,
                                     config.lambda, n_reg, &parts);

    auto diverge = [&](const std::string& why) {
      if (writes) model.save((out / "last_good.thmb").string());
      throw TrainingDivergence("step " + std::to_string(step) + ": " + why);
    };
    if (!std::isfinite(parts.total)) diverge("loss is not finite");
    tape.backward(loss);
    try {
      adam_step(model.params(), vars.gradients(), adam, config.adam);
    } catch (const TrainingDivergence& e) {
      diverge(e.what());
    }
    result.history.push_back({step, parts});

    if (config.log_every && step % config.log_every == 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "step %zu loss %.5f (cls %.5f reg %.5f) avg50 %.5f", step,
                    parts.total, parts.cls, parts.reg, smoothed_loss(result.history, step));
      log::info(buf);
    }
    if (writes && config.checkpoint_every && step % config.checkpoint_every == 0 &&
        step != config.steps) {
      model.save((out / checkpoint_name(step)).string());
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (writes) {
    model.save((out / "model.thmb").string());
    write_text(out / "loss.csv", loss_history_csv(result.history));
  }
  return result;
}

}  // namespace thumbseed
