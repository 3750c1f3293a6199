// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

// C interface to the thumbseed thumbnail network: synthetic data generation,
// training, inference, evaluation and gradient self-checks.
//
// Every function returns a ts_status. On failure the message for the calling
// thread is available from ts_last_error() until the next failing call.
// Handles are opaque and must be released with the matching *_free.

#ifndef THUMBSEED_THUMBSEED_H_
#define THUMBSEED_THUMBSEED_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(THUMBSEED_BUILDING)
#    define THUMBSEED_API __declspec(dllexport)
#  else
#    define THUMBSEED_API __declspec(dllimport)
#  endif
#else
#  define THUMBSEED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_INVALID_ARGUMENT = 1,
  TS_ERR_FORMAT = 2,
  TS_ERR_VALIDATION = 3,
  TS_ERR_CONTRACT = 4,
  TS_ERR_DIVERGENCE = 5,
  TS_ERR_IO = 6,
  TS_ERR_INTERNAL = 7
} ts_status;

typedef struct ts_model ts_model;
typedef struct ts_gradcheck_report ts_gradcheck_report;

// Center/size box in pixels.
typedef struct ts_box {
  double cx;
  double cy;
  double w;
  double h;
} ts_box;

typedef struct ts_model_options {
  uint32_t resolution;  // square input side; multiple of 16
  uint32_t k;           // anchor scales per location, areas (128 * 2^t)^2
  uint32_t gca_hidden;  // LSTM width per direction
  uint32_t rpn_hidden;  // 3x3 trunk channels
} ts_model_options;

typedef struct ts_train_options {
  uint64_t steps;
  double lr;
  double beta1;
  double beta2;
  double eps;
  double lambda;
  uint64_t seed;
  uint64_t checkpoint_every;  // 0 disables periodic checkpoints
  uint64_t log_every;         // 0 disables progress lines on stderr
} ts_train_options;

typedef struct ts_train_summary {
  uint64_t steps;
  double seconds;
  double final_loss;           // last step
  double final_smoothed_loss;  // mean over the last 50 steps
} ts_train_summary;

typedef struct ts_eval_options {
  int identity_oracle;  // score the ground truth against itself; no model needed
  int snap;             // shrink predictions to the query aspect exactly
  uint32_t threads;     // 0: THUMBSEED_THREADS or 1
} ts_eval_options;

typedef struct ts_metrics {
  uint64_t count;
  double co;
  double rf;
  double iou;
  double arm;
  double hit_ratio;
  double background_ratio;
  double seconds;
  double images_per_second;
} ts_metrics;

typedef struct ts_dataset_options {
  uint64_t n_train;
  uint64_t n_test;
  uint64_t n_holdout;  // drawn at the reserved holdout aspect
  uint64_t seed;
} ts_dataset_options;

typedef struct ts_gradcheck_options {
  uint64_t seed;
  double epsilon;
  double threshold;
} ts_gradcheck_options;

typedef struct ts_smoothness {
  double max_gap;
  double median_gap;
  uint32_t samples;
} ts_smoothness;

THUMBSEED_API const char* ts_version(void);
THUMBSEED_API const char* ts_last_error(void);
THUMBSEED_API const char* ts_status_name(ts_status status);
// Silences informational messages on stderr when nonzero.
THUMBSEED_API void ts_set_quiet(int quiet);

THUMBSEED_API void ts_model_options_default(ts_model_options* options);
THUMBSEED_API void ts_train_options_default(ts_train_options* options);
THUMBSEED_API void ts_eval_options_default(ts_eval_options* options);
THUMBSEED_API void ts_dataset_options_default(ts_dataset_options* options);
THUMBSEED_API void ts_gradcheck_options_default(ts_gradcheck_options* options);

THUMBSEED_API ts_status ts_model_create(const ts_model_options* options, uint64_t seed,
                                        ts_model** out);
// Reads a checkpoint and the ".cfg" sidecar next to it.
THUMBSEED_API ts_status ts_model_load(const char* checkpoint_path, ts_model** out);
THUMBSEED_API ts_status ts_model_save(const ts_model* model, const char* checkpoint_path);
THUMBSEED_API void ts_model_free(ts_model* model);
THUMBSEED_API ts_status ts_model_input_size(const ts_model* model, uint32_t* height,
                                            uint32_t* width);
// Sidecar text of the model configuration; valid until the model is freed.
THUMBSEED_API const char* ts_model_config_text(const ts_model* model);

// Highest-scoring candidate for an interleaved RGB image (height x width x 3,
// values in [0, 1]), in that image's pixel frame and not clipped.
THUMBSEED_API ts_status ts_model_predict(const ts_model* model, const float* rgb,
                                         uint32_t height, uint32_t width, double aspect,
                                         ts_box* box, double* score);

// Reads a P6 image, predicts, clips (and snaps when asked), crops and
// resizes to out_width x out_height, and writes a P6 thumbnail. The chosen
// box is the crop region in source pixels.
THUMBSEED_API ts_status ts_infer_file(const ts_model* model, const char* image_path,
                                      double aspect, uint32_t out_width, uint32_t out_height,
                                      int snap, const char* out_path, ts_box* box,
                                      double* score);

// Trains in place on an annotation file. With out_dir set, writes periodic
// checkpoints, model.thmb and loss.csv there. On divergence the parameters
// from before the failing step are saved as last_good.thmb and
// TS_ERR_DIVERGENCE is returned.
THUMBSEED_API ts_status ts_train(ts_model* model, const char* annotations_path,
                                 const char* out_dir, const ts_train_options* options,
                                 ts_train_summary* summary);

// Scores a test set. With out_dir set, writes metrics.txt, metrics.json and
// per_sample.csv there. model may be NULL in identity-oracle mode.
THUMBSEED_API ts_status ts_evaluate(const ts_model* model, const char* annotations_path,
                                    const ts_eval_options* options, const char* out_dir,
                                    ts_metrics* metrics);

// Writes train.jsonl, test.jsonl, holdout.jsonl, images/ and manifest.json.
// The manifest checksum covers every annotation and image byte.
THUMBSEED_API ts_status ts_generate_dataset(const char* out_dir,
                                            const ts_dataset_options* options,
                                            char* checksum_hex, size_t checksum_size);

// Jumps between FMN-generated kernels over n log-spaced aspects in [lo, hi].
// head is "box" or "score".
THUMBSEED_API ts_status ts_kernel_smoothness(const ts_model* model, const char* head, double lo,
                                             double hi, uint32_t n, ts_smoothness* out);

THUMBSEED_API ts_status ts_gradcheck(const ts_gradcheck_options* options,
                                     ts_gradcheck_report** out);
THUMBSEED_API int ts_gradcheck_passed(const ts_gradcheck_report* report);
THUMBSEED_API size_t ts_gradcheck_count(const ts_gradcheck_report* report);
THUMBSEED_API double ts_gradcheck_seconds(const ts_gradcheck_report* report);
// Borrowed strings stay valid until the report is freed.
THUMBSEED_API ts_status ts_gradcheck_entry(const ts_gradcheck_report* report, size_t index,
                                           const char** check, const char** param,
                                           double* error, int* pass);
THUMBSEED_API void ts_gradcheck_free(ts_gradcheck_report* report);

// Test hook: scales the incoming gradient of every node recorded by the
// named op during backward passes. NULL or "" restores normal behavior.
THUMBSEED_API void ts_debug_set_backward_fault(const char* op, double scale);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // THUMBSEED_THUMBSEED_H_
