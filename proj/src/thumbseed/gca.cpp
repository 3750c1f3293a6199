// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/gca.hpp"

#include "thumbseed/init.hpp"
#include "thumbseed/ops.hpp"

namespace thumbseed {
namespace {

void add_lstm(ParamStore& params, const std::string& name, std::size_t in, std::size_t hidden,
              Rng& rng, double stddev) {
  params.add(name + ".wx", gaussian_tensor({in, 4 * hidden}, rng, stddev));
  params.add(name + ".wh", gaussian_tensor({hidden, 4 * hidden}, rng, stddev));
  params.add(name + ".b", Tensor(Shape{4 * hidden}));
}

template <typename T>
Var<T> bidirectional(Var<T> seq, const ParamVars<T>& p, const std::string& fwd,
                     const std::string& bwd) {
  Var<T> f = ops::lstm_scan(seq, p[fwd + ".wx"], p[fwd + ".wh"], p[fwd + ".b"], false);
  Var<T> b = ops::lstm_scan(seq, p[bwd + ".wx"], p[bwd + ".wh"], p[bwd + ".b"], true);
  return ops::concat_last(f, b);
}

}  // namespace

void init_gca_params(ParamStore& params, const GcaConfig& config, Rng& rng, double stddev,
                     const std::string& prefix) {
  const std::size_t h = config.hidden;
  add_lstm(params, prefix + ".row_fwd", config.channels, h, rng, stddev);
  add_lstm(params, prefix + ".row_bwd", config.channels, h, rng, stddev);
  add_lstm(params, prefix + ".col_fwd", 2 * h, h, rng, stddev);
  add_lstm(params, prefix + ".col_bwd", 2 * h, h, rng, stddev);
  params.add(prefix + ".logits.weight",
             gaussian_tensor({1, 1, config.context_channels(), config.positions()}, rng, stddev));
  params.add(prefix + ".logits.bias", Tensor(Shape{config.positions()}));
}

template <typename T>
Var<T> renet_scan(Var<T> features, const ParamVars<T>& params, const std::string& prefix) {
  const Shape& s = features.shape();
  if (s.size() != 3 || s[0] == 0 || s[1] == 0) {
    throw InvalidArgument("renet_scan: nonempty H x W x C feature map required, got " +
                          shape_str(s));
  }
  // Rows: N = H sequences of length W.
  Var<T> rows = bidirectional(features, params, prefix + ".row_fwd", prefix + ".row_bwd");
  // Columns: N = W sequences of length H over the row result.
  Var<T> cols = bidirectional(ops::transpose01(rows), params, prefix + ".col_fwd",
                              prefix + ".col_bwd");
  return ops::concat_last(rows, ops::transpose01(cols));
}

template <typename T>
Var<T> attention_logits(Var<T> context, Var<T> weight, Var<T> bias, std::size_t feat_h,
                        std::size_t feat_w) {
  const Shape& s = context.shape();
  if (s.size() != 3 || s[0] != feat_h || s[1] != feat_w) {
    throw InvalidArgument("attention_logits: model built for " + std::to_string(feat_h) + "x" +
                          std::to_string(feat_w) + " feature maps, got " + shape_str(s));
  }
  if (weight.shape().size() != 4 || weight.shape()[3] != feat_h * feat_w) {
    throw InvalidArgument("attention_logits: logit conv must output H*W channels");
  }
  return ops::conv2d(context, weight, bias, 1, Padding::Same);
}

template <typename T>
Var<T> attention_weights(Var<T> logits) {
  const Shape& s = logits.shape();
  const std::size_t d = s.size() == 3 ? s[0] * s[1] : 0;
  if (d == 0 || s[2] != d) {
    throw InvalidArgument("attention logits must be H x W x (H*W), got " + shape_str(s));
  }
  return ops::softmax_rows(ops::reshape(logits, {d, d}));
}

template <typename T>
Var<T> aggregate(Var<T> features, Var<T> logits) {
  const Shape& fs = features.shape();
  const Shape& zs = logits.shape();
  if (fs.size() != 3 || zs.size() != 3 || fs[0] != zs[0] || fs[1] != zs[1] ||
      zs[2] != fs[0] * fs[1]) {
    throw InvalidArgument("aggregate: logits " + shape_str(zs) + " do not match features " +
                          shape_str(fs));
  }
  const std::size_t d = fs[0] * fs[1];
  Var<T> weights = attention_weights(logits);
  Var<T> flat = ops::reshape(features, {d, fs[2]});
  return ops::reshape(ops::matmul(weights, flat), fs);
}

template <typename T>
Var<T> gca_forward(Var<T> features, const ParamVars<T>& params, const GcaConfig& config,
                   const std::string& prefix) {
  Var<T> context = renet_scan(features, params, prefix);
  Var<T> logits = attention_logits(context, params[prefix + ".logits.weight"],
                                   params[prefix + ".logits.bias"], config.feat_h, config.feat_w);
  return aggregate(features, logits);
}

#define THUMBSEED_INSTANTIATE_GCA(T)                                                          \
  template Var<T> renet_scan<T>(Var<T>, const ParamVars<T>&, const std::string&);           \
  template Var<T> attention_logits<T>(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t);    \
  template Var<T> attention_weights<T>(Var<T>);                                             \
  template Var<T> aggregate<T>(Var<T>, Var<T>);                                             \
  template Var<T> gca_forward<T>(Var<T>, const ParamVars<T>&, const GcaConfig&,             \
                                 const std::string&);

THUMBSEED_INSTANTIATE_GCA(float)
THUMBSEED_INSTANTIATE_GCA(double)

}  // namespace thumbseed
