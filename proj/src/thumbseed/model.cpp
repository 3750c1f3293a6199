// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "thumbseed/checkpoint.hpp"
#include "thumbseed/init.hpp"
#include "thumbseed/ops.hpp"

namespace thumbseed {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename V>
std::string join(const std::vector<V>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<V>) {
      s += fmt_double(values[i]);
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw FormatError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw FormatError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

template <typename F>
auto parse_list(const std::string& key, const std::string& v, F parse) {
  std::vector<decltype(parse(key, v))> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(key, item));
  return out;
}

std::string conv_name(std::size_t i) { return "backbone.conv" + std::to_string(i); }

}  // namespace

GcaConfig ModelConfig::gca() const {
  return {feat_h(), feat_w(), feature_channels(), gca_hidden};
}

FmnConfig ModelConfig::box_fmn() const {
  return {{1, 1, rpn_hidden, 4 * k()}, fmn_hidden};
}

FmnConfig ModelConfig::score_fmn() const {
  return {{1, 1, rpn_hidden, k()}, fmn_hidden};
}

void ModelConfig::validate() const {
  if (backbone_channels.empty()) throw InvalidArgument("config: backbone needs at least one stage");
  for (auto c : backbone_channels) {
    if (c == 0) throw InvalidArgument("config: backbone channels must be positive");
  }
  const std::size_t s = stride();
  if (input_h == 0 || input_w == 0 || input_h % s != 0 || input_w % s != 0) {
    throw InvalidArgument("config: input " + std::to_string(input_h) + "x" +
                          std::to_string(input_w) + " is not a multiple of the stride " +
                          std::to_string(s));
  }
  if (gca_hidden == 0 || rpn_hidden == 0) throw InvalidArgument("config: hidden sizes must be positive");
  if (anchor_areas.empty()) throw InvalidArgument("config: k must be at least 1");
  for (double a : anchor_areas) {
    if (!(a > 0.0)) throw InvalidArgument("config: anchor areas must be positive");
  }
  if (!(init_std > 0.0) || !(fmn_output_scale > 0.0)) {
    throw InvalidArgument("config: init scales must be positive");
  }
  box_fmn().validate();
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "input_h=" << input_h << '\n'
      << "input_w=" << input_w << '\n'
      << "backbone_channels=" << join(backbone_channels) << '\n'
      << "gca_hidden=" << gca_hidden << '\n'
      << "rpn_hidden=" << rpn_hidden << '\n'
      << "anchor_areas=" << join(anchor_areas) << '\n'
      << "fmn_hidden=" << join(fmn_hidden) << '\n'
      << "init_std=" << fmt_double(init_std) << '\n'
      << "fmn_output_scale=" << fmt_double(fmn_output_scale) << '\n'
      << "backbone_init=" << (backbone_he_init ? "he" : "gaussian") << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string v = line.substr(eq + 1);
    if (key == "input_h") c.input_h = parse_size(key, v);
    else if (key == "input_w") c.input_w = parse_size(key, v);
    else if (key == "backbone_channels") c.backbone_channels = parse_list(key, v, parse_size);
    else if (key == "gca_hidden") c.gca_hidden = parse_size(key, v);
    else if (key == "rpn_hidden") c.rpn_hidden = parse_size(key, v);
    else if (key == "anchor_areas") c.anchor_areas = parse_list(key, v, parse_double);
    else if (key == "fmn_hidden") c.fmn_hidden = parse_list(key, v, parse_size);
    else if (key == "init_std") c.init_std = parse_double(key, v);
    else if (key == "fmn_output_scale") c.fmn_output_scale = parse_double(key, v);
    else if (key == "backbone_init") {
      if (v != "he" && v != "gaussian") {
        throw FormatError("config line " + std::to_string(lineno) + ": backbone_init must be he or gaussian");
      }
      c.backbone_he_init = v == "he";
    }
    else throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::string config_path_for(const std::string& checkpoint_path) {
  return std::filesystem::path(checkpoint_path).replace_extension(".cfg").string();
}

ParamStore init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, "init"));
  const double sd = config.init_std;
  ParamStore p;
  std::size_t cin = 3;
  for (std::size_t i = 0; i < config.backbone_channels.size(); ++i) {
    const std::size_t cout = config.backbone_channels[i];
    const double conv_sd = config.backbone_he_init ? std::sqrt(2.0 / static_cast<double>(9 * cin)) : sd;
    p.add(conv_name(i) + ".weight", gaussian_tensor({3, 3, cin, cout}, rng, conv_sd));
    p.add(conv_name(i) + ".bias", Tensor(Shape{cout}));
    cin = cout;
  }
  init_gca_params(p, config.gca(), rng, sd);
  p.add("rpn.trunk.weight", gaussian_tensor({3, 3, cin, config.rpn_hidden}, rng, sd));
  p.add("rpn.trunk.bias", Tensor(Shape{config.rpn_hidden}));
  init_fmn_params(p, "rpn.box_fmn", config.box_fmn(), rng, sd, config.fmn_output_scale);
  init_fmn_params(p, "rpn.score_fmn", config.score_fmn(), rng, sd, config.fmn_output_scale);
  return p;
}

template <typename T>
Var<T> backbone_forward(Var<T> image, const ParamVars<T>& params, const ModelConfig& config) {
  const Shape expected{config.input_h, config.input_w, 3};
  if (image.shape() != expected) {
    throw InvalidArgument("backbone: expected image " + shape_str(expected) + ", got " +
                          shape_str(image.shape()));
  }
  Var<T> x = image;
  for (std::size_t i = 0; i < config.backbone_channels.size(); ++i) {
    x = ops::conv2d(x, params[conv_name(i) + ".weight"], params[conv_name(i) + ".bias"], 1,
                    Padding::Same);
    x = ops::avg_pool2(ops::relu(x));
  }
  return x;
}

template <typename T>
RpnVars<T> rpn_forward(Var<T> attended, double aspect, const ParamVars<T>& params,
                       const ModelConfig& config) {
  if (!(aspect > 0.0)) throw InvalidArgument("rpn: aspect must be positive");
  Var<T> trunk = ops::relu(ops::conv2d(attended, params["rpn.trunk.weight"],
                                       params["rpn.trunk.bias"], 1, Padding::Same));
  return {adaptive_conv(trunk, aspect, params, "rpn.box_fmn", config.box_fmn(), Activation::Linear),
          adaptive_conv(trunk, aspect, params, "rpn.score_fmn", config.score_fmn(),
                        Activation::Sigmoid)};
}

template <typename T>
ForwardVars<T> model_forward(Tape<T>& tape, const BasicTensor<T>& image, double aspect,
                             const ParamVars<T>& params, const ModelConfig& config) {
  Var<T> input = tape.leaf(image);
  Var<T> features = backbone_forward(input, params, config);
  Var<T> attended = gca_forward(features, params, config.gca());
  return {features, attended, rpn_forward(attended, aspect, params, config)};
}

std::vector<Candidate> decode_candidates(const Tensor& deltas, const Tensor& scores,
                                         const AnchorGrid& anchors) {
  const std::size_t n = anchors.anchors.size();
  if (deltas.size() != 4 * n || scores.size() != n) {
    throw InvalidArgument("decode_candidates: head outputs do not match the anchor grid");
  }
  std::vector<Candidate> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    const BoxDelta d{deltas[4 * a], deltas[4 * a + 1], deltas[4 * a + 2], deltas[4 * a + 3]};
    out[a] = {decode(d, anchors.anchors[a]), scores[a]};
  }
  return out;
}

std::size_t best_candidate(const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw InvalidArgument("best_candidate: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].score > candidates[best].score) best = i;
  }
  return best;
}

Model::Model(ModelConfig config, ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const ParamStore reference = init_params(config_, 0);
  for (const auto& name : reference.names()) {
    if (!params_.contains(name)) throw FormatError("model: missing parameter '" + name + "'");
    if (params_.get(name).shape() != reference.get(name).shape()) {
      throw FormatError("model: parameter '" + name + "' has shape " +
                        shape_str(params_.get(name).shape()) + ", expected " +
                        shape_str(reference.get(name).shape()));
    }
  }
  if (params_.size() != reference.size()) throw FormatError("model: unexpected extra parameters");
}

Model Model::initialize(const ModelConfig& config, std::uint64_t seed) {
  return Model(config, init_params(config, seed));
}

Model Model::load(const std::string& checkpoint_path) {
  const std::string cfg_path = config_path_for(checkpoint_path);
  std::FILE* f = std::fopen(cfg_path.c_str(), "rb");
  if (!f) throw IoError("cannot open model config '" + cfg_path + "'");
  std::string text;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
  std::fclose(f);
  return Model(ModelConfig::from_text(text), load_tensors(checkpoint_path));
}

void Model::save(const std::string& checkpoint_path) const {
  save_tensors(checkpoint_path, params_);
  const std::string cfg_path = config_path_for(checkpoint_path);
  std::FILE* f = std::fopen(cfg_path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + cfg_path + "' for writing");
  const std::string text = config_.to_text();
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  std::fclose(f);
  if (!ok) throw IoError("write failed for '" + cfg_path + "'");
}

AnchorGrid Model::anchors(double aspect) const {
  return generate_anchors(config_.feat_h(), config_.feat_w(),
                          static_cast<double>(config_.stride()), config_.anchor_areas, aspect);
}

RpnOutputs Model::predict(const Tensor& image, double aspect) const {
  Tape<float> tape;
  ParamVars<float> vars(tape, params_, false);
  ForwardVars<float> out = model_forward(tape, image, aspect, vars, config_);
  return {out.rpn.deltas.value(), out.rpn.scores.value()};
}

std::vector<Candidate> Model::full_forward(const Tensor& image, double aspect) const {
  RpnOutputs out = predict(image, aspect);
  return decode_candidates(out.deltas, out.scores, anchors(aspect));
}

Candidate Model::best_box(const Tensor& image, double aspect) const {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw InvalidArgument("best_box: expected an H x W x 3 image");
  }
  const double sx = static_cast<double>(config_.input_w) / static_cast<double>(image.dim(1));
  const double sy = static_cast<double>(config_.input_h) / static_cast<double>(image.dim(0));
  if (sx == 1.0 && sy == 1.0) {
    const auto cands = full_forward(image, aspect);
    return cands[best_candidate(cands)];
  }
  // Non-uniform rescale changes the aspect a box must have in model space.
  const Tensor resized = bilinear_resize(image, config_.input_h, config_.input_w);
  const auto cands = full_forward(resized, aspect * sx / sy);
  Candidate c = cands[best_candidate(cands)];
  c.box = {c.box.cx / sx, c.box.cy / sy, c.box.w / sx, c.box.h / sy};
  return c;
}

#define THUMBSEED_INSTANTIATE_MODEL(T)                                                         \
  template Var<T> backbone_forward<T>(Var<T>, const ParamVars<T>&, const ModelConfig&);      \
  template RpnVars<T> rpn_forward<T>(Var<T>, double, const ParamVars<T>&, const ModelConfig&); \
  template ForwardVars<T> model_forward<T>(Tape<T>&, const BasicTensor<T>&, double,          \
                                           const ParamVars<T>&, const ModelConfig&);

THUMBSEED_INSTANTIATE_MODEL(float)
THUMBSEED_INSTANTIATE_MODEL(double)

}  // namespace thumbseed
