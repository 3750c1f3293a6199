// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

// thumbseed: dataset generation, training, inference, evaluation and
// gradient self-checks over the C interface.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "thumbseed/thumbseed.h"

namespace {

namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kDivergence = 3, kIo = 4 };

int exit_code(ts_status s) {
  switch (s) {
    case TS_OK: return kOk;
    case TS_ERR_INVALID_ARGUMENT:
    case TS_ERR_VALIDATION: return kUsage;
    case TS_ERR_DIVERGENCE: return kDivergence;
    case TS_ERR_FORMAT:
    case TS_ERR_IO: return kIo;
    default: return kCheckFailed;
  }
}

int report(ts_status s, const char* what) {
  std::fprintf(stderr, "thumbseed %s: %s: %s\n", what, ts_status_name(s), ts_last_error());
  return exit_code(s);
}

int usage(const std::string& message) {
  std::fprintf(stderr, "thumbseed: %s\n", message.c_str());
  return kUsage;
}

struct ModelDeleter {
  void operator()(ts_model* m) const { ts_model_free(m); }
};
using ModelPtr = std::unique_ptr<ts_model, ModelDeleter>;

// Dataset flag: an annotation file, or a directory holding <split>.jsonl.
std::string annotation_file(const std::string& data, const std::string& split) {
  if (fs::is_directory(data)) return (fs::path(data) / (split + ".jsonl")).string();
  return data;
}

bool echo_config(const std::string& dir, const std::string& text) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(fs::path(dir) / "run_config.txt", std::ios::binary);
  out << text;
  return static_cast<bool>(out.flush());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GenData {
  std::string out;
  std::uint64_t n = 2000;
  std::uint64_t n_test = 200;
  std::uint64_t n_holdout = 200;
  std::uint64_t seed = 7;
};

int run_gen_data(const GenData& a) {
  if (a.n == 0) return usage("gen-data: --n must be at least 1");
  std::ostringstream cfg;
  cfg << "command=gen-data\nout=" << a.out << "\nn=" << a.n << "\nn_test=" << a.n_test
      << "\nn_holdout=" << a.n_holdout << "\nseed=" << a.seed << "\n";
  if (!echo_config(a.out, cfg.str())) {
    std::fprintf(stderr, "thumbseed gen-data: cannot write to '%s'\n", a.out.c_str());
    return kIo;
  }
  ts_dataset_options o{a.n, a.n_test, a.n_holdout, a.seed};
  char checksum[32];
  const ts_status s = ts_generate_dataset(a.out.c_str(), &o, checksum, sizeof checksum);
  if (s != TS_OK) return report(s, "gen-data");
  std::printf("wrote %llu train, %llu test, %llu holdout samples to %s\nchecksum %s\n",
              static_cast<unsigned long long>(a.n), static_cast<unsigned long long>(a.n_test),
              static_cast<unsigned long long>(a.n_holdout), a.out.c_str(), checksum);
  return kOk;
}

struct Train {
  std::string data;
  std::string out;
  std::string checkpoint;  // optional starting point
  ts_train_options opt{};
  ts_model_options model{};
  bool quiet = false;
};

int run_train(Train& a) {
  const std::string ann = annotation_file(a.data, "train");
  if (!fs::is_regular_file(ann)) return usage("train: dataset '" + ann + "' not found");
  ts_set_quiet(a.quiet);
  ts_model* raw = nullptr;
  ts_status s = a.checkpoint.empty() ? ts_model_create(&a.model, a.opt.seed, &raw)
                                     : ts_model_load(a.checkpoint.c_str(), &raw);
  if (s != TS_OK) return report(s, "train");
  ModelPtr model(raw);

  std::ostringstream cfg;
  cfg << "command=train\ndata=" << a.data << "\nout=" << a.out << "\ncheckpoint=" << a.checkpoint
      << "\nsteps=" << a.opt.steps << "\nlr=" << fmt(a.opt.lr) << "\nbeta1=" << fmt(a.opt.beta1)
      << "\nbeta2=" << fmt(a.opt.beta2) << "\neps=" << fmt(a.opt.eps)
      << "\nlambda=" << fmt(a.opt.lambda) << "\nseed=" << a.opt.seed
      << "\ncheckpoint_every=" << a.opt.checkpoint_every << "\n"
      << ts_model_config_text(model.get());
  if (!echo_config(a.out, cfg.str())) {
    std::fprintf(stderr, "thumbseed train: cannot write to '%s'\n", a.out.c_str());
    return kIo;
  }
  ts_train_summary summary{};
  s = ts_train(model.get(), ann.c_str(), a.out.c_str(), &a.opt, &summary);
  if (s != TS_OK) return report(s, "train");
  std::printf("trained %llu steps in %.1f s (%.2f steps/s), final loss %.6f, last-50 mean %.6f\n",
              static_cast<unsigned long long>(summary.steps), summary.seconds,
              summary.seconds > 0 ? static_cast<double>(summary.steps) / summary.seconds : 0.0,
              summary.final_loss, summary.final_smoothed_loss);
  std::printf("model written to %s\n", (fs::path(a.out) / "model.thmb").string().c_str());
  return kOk;
}

struct Infer {
  std::string checkpoint;
  std::string image;
  std::string out;
  std::string out_size = "64x64";
  double aspect = 1.0;
  bool snap = false;
};

int run_infer(const Infer& a) {
  if (!(a.aspect > 0.1 && a.aspect < 10.0)) return usage("infer: --aspect must be in (0.1, 10)");
  unsigned w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(a.out_size.c_str(), "%ux%u%c", &w, &h, &tail) != 2 || w == 0 || h == 0) {
    return usage("infer: --out-size must look like WxH, got '" + a.out_size + "'");
  }
  ts_model* raw = nullptr;
  ts_status s = ts_model_load(a.checkpoint.c_str(), &raw);
  if (s != TS_OK) {
    std::fprintf(stderr, "thumbseed infer: %s\n", ts_last_error());
    return kIo;
  }
  ModelPtr model(raw);
  ts_box box{};
  double score = 0.0;
  s = ts_infer_file(model.get(), a.image.c_str(), a.aspect, w, h, a.snap, a.out.c_str(), &box,
                    &score);
  if (s != TS_OK) return report(s, "infer");
  std::printf("box cx=%.3f cy=%.3f w=%.3f h=%.3f aspect=%.6f score=%.6f\nthumbnail %ux%u written to %s\n",
              box.cx, box.cy, box.w, box.h, box.w / box.h, score, w, h, a.out.c_str());
  return kOk;
}

struct Eval {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string out;
  bool snap = false;
  bool oracle = false;
  std::uint32_t threads = 0;
};

int run_eval(const Eval& a) {
  const std::string ann = annotation_file(a.data, a.split);
  if (!fs::is_regular_file(ann)) return usage("eval: dataset '" + ann + "' not found");
  if (!a.oracle && a.checkpoint.empty()) return usage("eval: --checkpoint is required without --oracle");
  ModelPtr model;
  if (!a.oracle) {
    ts_model* raw = nullptr;
    const ts_status s = ts_model_load(a.checkpoint.c_str(), &raw);
    if (s != TS_OK) {
      std::fprintf(stderr, "thumbseed eval: %s\n", ts_last_error());
      return kIo;
    }
    model.reset(raw);
  }
  if (!a.out.empty()) {
    std::ostringstream cfg;
    cfg << "command=eval\ndata=" << a.data << "\nsplit=" << a.split << "\ncheckpoint="
        << a.checkpoint << "\nout=" << a.out << "\nsnap=" << a.snap << "\noracle=" << a.oracle
        << "\n";
    if (!echo_config(a.out, cfg.str())) {
      std::fprintf(stderr, "thumbseed eval: cannot write to '%s'\n", a.out.c_str());
      return kIo;
    }
  }
  ts_eval_options o{a.oracle ? 1 : 0, a.snap ? 1 : 0, a.threads};
  ts_metrics m{};
  const ts_status s =
      ts_evaluate(model.get(), ann.c_str(), &o, a.out.empty() ? nullptr : a.out.c_str(), &m);
  if (s != TS_OK) return report(s, "eval");
  std::printf("count=%llu\nCO=%.9g\nRF=%.9g\nIoU=%.9g\nARM=%.9g\nh_r=%.9g\nb_r=%.9g\n",
              static_cast<unsigned long long>(m.count), m.co, m.rf, m.iou, m.arm, m.hit_ratio,
              m.background_ratio);
  std::printf("throughput %.2f images/s (%.3f s)\n", m.images_per_second, m.seconds);
  if (!a.out.empty()) {
    std::ofstream t(fs::path(a.out) / "throughput.txt", std::ios::binary);
    t << "images_per_second=" << fmt(m.images_per_second) << "\nseconds=" << fmt(m.seconds) << "\n";
  }
  return kOk;
}

struct GradCheck {
  std::uint64_t seed = 7;
  std::string corrupt_op;
  double corrupt_scale = 1.5;
  bool verbose = false;
};

int run_gradcheck(const GradCheck& a) {
  if (!a.corrupt_op.empty()) ts_debug_set_backward_fault(a.corrupt_op.c_str(), a.corrupt_scale);
  ts_gradcheck_options o;
  ts_gradcheck_options_default(&o);
  o.seed = a.seed;
  ts_gradcheck_report* r = nullptr;
  const ts_status s = ts_gradcheck(&o, &r);
  if (s != TS_OK) return report(s, "gradcheck");
  const std::unique_ptr<ts_gradcheck_report, void (*)(ts_gradcheck_report*)> guard(r, ts_gradcheck_free);
  double worst = 0.0;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < ts_gradcheck_count(r); ++i) {
    const char* check = nullptr;
    const char* param = nullptr;
    double err = 0.0;
    int pass = 0;
    ts_gradcheck_entry(r, i, &check, &param, &err, &pass);
    worst = err > worst ? err : worst;
    if (!pass) {
      ++failed;
      std::printf("FAIL %s %s rel_error=%.3e\n", check, param, err);
    } else if (a.verbose) {
      std::printf("ok   %s %s rel_error=%.3e\n", check, param, err);
    }
  }
  std::printf("gradcheck: %zu/%zu parameters within %.0e, max rel_error %.3e, %.1f s\n",
              ts_gradcheck_count(r) - failed, ts_gradcheck_count(r), o.threshold, worst,
              ts_gradcheck_seconds(r));
  return ts_gradcheck_passed(r) ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-ratio-conditioned thumbnail generation"};
  app.set_version_flag("--version", ts_version());
  app.require_subcommand(1);

  GenData gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic train/test/holdout dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--n", gen.n, "Training samples")->capture_default_str();
  g->add_option("--n-test", gen.n_test, "Test samples")->capture_default_str();
  g->add_option("--n-holdout", gen.n_holdout, "Samples at the holdout aspect")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();

  Train tr;
  ts_train_options_default(&tr.opt);
  ts_model_options_default(&tr.model);
  auto* t = app.add_subcommand("train", "Train on an annotated dataset");
  t->add_option("--data", tr.data, "Dataset directory or annotation file")->required();
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--checkpoint", tr.checkpoint, "Start from this checkpoint");
  t->add_option("--steps", tr.opt.steps, "Optimization steps")->capture_default_str();
  t->add_option("--lr", tr.opt.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--lambda", tr.opt.lambda, "Regression weight")->capture_default_str();
  t->add_option("--seed", tr.opt.seed, "Random seed")->capture_default_str();
  t->add_option("--checkpoint-every", tr.opt.checkpoint_every, "Steps between checkpoints")
      ->capture_default_str();
  t->add_option("--resolution", tr.model.resolution, "Square input side")->capture_default_str();
  t->add_option("--k", tr.model.k, "Anchor scales per location")->capture_default_str();
  t->add_option("--hidden", tr.model.rpn_hidden, "RPN trunk channels")->capture_default_str();
  t->add_option("--gca-hidden", tr.model.gca_hidden, "LSTM width per direction")
      ->capture_default_str();
  t->add_flag("--quiet", tr.quiet, "No progress output");

  Infer inf;
  auto* i = app.add_subcommand("infer", "Write a thumbnail for one image");
  i->add_option("--checkpoint", inf.checkpoint, "Model checkpoint")->required();
  i->add_option("--image", inf.image, "Input P6 image")->required();
  i->add_option("--out", inf.out, "Output P6 thumbnail")->required();
  i->add_option("--aspect", inf.aspect, "Target aspect ratio (width / height)")->required();
  i->add_option("--out-size", inf.out_size, "Thumbnail size WxH")->capture_default_str();
  i->add_flag("--snap", inf.snap, "Enforce the aspect exactly before resizing");

  Eval ev;
  auto* e = app.add_subcommand("eval", "Evaluate thumbnail metrics on an annotated set");
  e->add_option("--data", ev.data, "Dataset directory or annotation file")->required();
  e->add_option("--split", ev.split, "Split name when --data is a directory")->capture_default_str();
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint");
  e->add_option("--out", ev.out, "Report directory");
  e->add_flag("--snap", ev.snap, "Enforce the query aspect exactly");
  e->add_flag("--oracle", ev.oracle, "Score ground truth against itself");
  e->add_option("--threads", ev.threads, "Worker threads (default THUMBSEED_THREADS or 1)");

  GradCheck gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference gradient self-check");
  c->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
  c->add_flag("--verbose", gc.verbose, "List every parameter");
  c->add_option("--corrupt-op", gc.corrupt_op)->group("");
  c->add_option("--corrupt-scale", gc.corrupt_scale)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  if (g->parsed()) return run_gen_data(gen);
  if (t->parsed()) return run_train(tr);
  if (i->parsed()) return run_infer(inf);
  if (e->parsed()) return run_eval(ev);
  if (c->parsed()) return run_gradcheck(gc);
  return kUsage;
}
