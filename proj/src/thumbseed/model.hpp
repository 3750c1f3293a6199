// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thumbseed/adaptive_conv.hpp"
#include "thumbseed/gca.hpp"
#include "thumbseed/geometry.hpp"
#include "thumbseed/params.hpp"

namespace thumbseed {

// Architecture of the thumbnail network. The input resolution is fixed
// because the attention logit depth equals the feature-map area.
struct ModelConfig {
  std::size_t input_h = 160;
  std::size_t input_w = 160;
  std::vector<std::size_t> backbone_channels{16, 32, 64, 64};
  std::size_t gca_hidden = 32;
  std::size_t rpn_hidden = 128;
  std::vector<double> anchor_areas = default_anchor_areas(3);
  std::vector<std::size_t> fmn_hidden{16, 64};
  double init_std = 0.02;
  // Backbone convs use He-normal (std sqrt(2 / fan_in)) when set, init_std otherwise.
  bool backbone_he_init = true;
  double fmn_output_scale = 0.1;

  std::size_t stride() const { return std::size_t{1} << backbone_channels.size(); }
  std::size_t feat_h() const { return input_h / stride(); }
  std::size_t feat_w() const { return input_w / stride(); }
  std::size_t feature_channels() const { return backbone_channels.back(); }
  std::size_t k() const { return anchor_areas.size(); }

  GcaConfig gca() const;
  FmnConfig box_fmn() const;
  FmnConfig score_fmn() const;

  void validate() const;

  /// Sidecar text, one key=value per line.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
};

/// Sidecar path for a checkpoint: same stem, ".cfg" extension.
std::string config_path_for(const std::string& checkpoint_path);

ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

template <typename T>
struct RpnVars {
  Var<T> deltas;  // feat_h x feat_w x 4k
  Var<T> scores;  // feat_h x feat_w x k, in (0, 1)
};

template <typename T>
struct ForwardVars {
  Var<T> features;
  Var<T> attended;
  RpnVars<T> rpn;
};

template <typename T>
Var<T> backbone_forward(Var<T> image, const ParamVars<T>& params, const ModelConfig& config);

template <typename T>
RpnVars<T> rpn_forward(Var<T> attended, double aspect, const ParamVars<T>& params,
                       const ModelConfig& config);

template <typename T>
ForwardVars<T> model_forward(Tape<T>& tape, const BasicTensor<T>& image, double aspect,
                             const ParamVars<T>& params, const ModelConfig& config);

struct Candidate {
  BoxCWH box;
  double score = 0.0;
};

/// Decodes every anchor's delta; order follows the anchor grid.
std::vector<Candidate> decode_candidates(const Tensor& deltas, const Tensor& scores,
                                         const AnchorGrid& anchors);

/// Highest score, lowest index on ties.
std::size_t best_candidate(const std::vector<Candidate>& candidates);

struct RpnOutputs {
  Tensor deltas;
  Tensor scores;
};

class Model {
 public:
  Model(ModelConfig config, ParamStore params);

  static Model initialize(const ModelConfig& config, std::uint64_t seed);
  /// Reads a checkpoint and its ".cfg" sidecar.
  static Model load(const std::string& checkpoint_path);
  void save(const std::string& checkpoint_path) const;

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  AnchorGrid anchors(double aspect) const;

  /// Raw head outputs for an image already at the model resolution.
  RpnOutputs predict(const Tensor& image, double aspect) const;

  /// All H*W*k candidates (row-major cells, template-minor) for an image at
  /// the model resolution.
  std::vector<Candidate> full_forward(const Tensor& image, double aspect) const;

  /// Best candidate for an image of any size, in that image's pixel frame.
  /// The image is resized to the model resolution when needed.
  Candidate best_box(const Tensor& image, double aspect) const;

 private:
  ModelConfig config_;
  ParamStore params_;
};

}  // namespace thumbseed
