// src/nnet.cc

// Copyright 2026  The bridge-oa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "bridge_oa/nnet.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "bridge_oa/error.h"

namespace bridge_oa {

using nn::Mat;
using nn::Vec;

namespace {

constexpr double kOmegaEpsilon = 1e-12;

std::string block_name(int b, const std::string &leaf) {
  return "block" + std::to_string(b) + "." + leaf;
}

std::string group_name(int b, int j, const std::string &leaf) {
  return block_name(b, "group" + std::to_string(j) + "." + leaf);
}

bool is_zero_init(const std::string &name) {
  auto ends_with = [&name](const std::string &suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".bias") || ends_with(".offset");
}

nn::SeWeights se_weights(const Parameters &p, const std::string &prefix) {
  return {p.mat(prefix + "fc1.weight"), p.vec(prefix + "fc1.bias"),
          p.mat(prefix + "fc2.weight"), p.vec(prefix + "fc2.bias")};
}

nn::SeGrads se_grads(Parameters *g, const std::string &prefix) {
  return {g->mat(prefix + "fc1.weight"), g->vec(prefix + "fc1.bias"),
          g->mat(prefix + "fc2.weight"), g->vec(prefix + "fc2.bias")};
}

}  // namespace

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.conv_channels = 16;
  cfg.bottleneck_dim = 8;
  cfg.res2_scale = 4;
  cfg.fc_nodes = 32;
  cfg.custom_width = true;
  return cfg;
}

void ModelConfig::validate() const {
  if (!custom_width && conv_channels != 256 && conv_channels != 384)
    throw InvalidArgument("conv_channels must be 256 or 384 (got " +
                          std::to_string(conv_channels) +
                          "); set custom_width to use other widths");
  if (conv_channels < 1 || bottleneck_dim < 1 || fc_nodes < 1 || n_mels < 1 ||
      num_blocks < 0)
    throw InvalidArgument("model dimensions must be positive");
  if (res2_scale < 2 || conv_channels % res2_scale != 0)
    throw InvalidArgument("res2_scale must be >= 2 and divide conv_channels");
  if (logits_dim < 2) throw InvalidArgument("logits_dim must be >= 2");
  if (frame_kernel < 1 || frame_kernel % 2 == 0 || res2_kernel < 1 ||
      res2_kernel % 2 == 0 || res2_dilation < 1)
    throw InvalidArgument("kernels must be odd and dilation positive");
}

std::string ModelConfig::fingerprint() const {
  std::ostringstream os;
  os << "bridging-net:c" << conv_channels << ":b" << bottleneck_dim << ":s"
     << res2_scale << ":fc" << fc_nodes << ":l" << logits_dim << ":m" << n_mels
     << ":k" << frame_kernel << ":rk" << res2_kernel << ":rd" << res2_dilation
     << ":n" << num_blocks;
  return os.str();
}

Tensor &Parameters::add(const std::string &name, std::vector<int> shape) {
  if (contains(name)) throw InvalidArgument("duplicate parameter " + name);
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw ShapeError("non-positive dimension in " + name);
    n *= static_cast<std::size_t>(d);
  }
  index_[name] = entries_.size();
  entries_.emplace_back(name, Tensor{std::move(shape), std::vector<double>(n, 0.0)});
  return entries_.back().second;
}

Tensor &Parameters::at(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return entries_[it->second].second;
}

const Tensor &Parameters::at(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return entries_[it->second].second;
}

std::size_t Parameters::total_numel() const {
  std::size_t n = 0;
  for (const auto &[name, t] : entries_) n += t.numel();
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters out;
  for (const auto &[name, t] : entries_) out.add(name, t.shape);
  return out;
}

void Parameters::set_zero() {
  for (auto &[name, t] : entries_) std::fill(t.data.begin(), t.data.end(), 0.0);
}

void Parameters::add_scaled(const Parameters &other, double scale) {
  if (other.size() != size()) throw ShapeError("parameter sets differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto &dst = entries_[i].second.data;
    const auto &src = other.entries_[i].second.data;
    if (dst.size() != src.size())
      throw ShapeError("shape mismatch for " + entries_[i].first);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
  }
}

nn::WeightMap Parameters::mat(const std::string &name) {
  Tensor &t = at(name);
  const int rows = t.shape.empty() ? 1 : t.shape[0];
  return {t.data.data(), rows, static_cast<Eigen::Index>(t.numel() / rows)};
}

nn::ConstWeightMap Parameters::mat(const std::string &name) const {
  const Tensor &t = at(name);
  const int rows = t.shape.empty() ? 1 : t.shape[0];
  return {t.data.data(), rows, static_cast<Eigen::Index>(t.numel() / rows)};
}

nn::BiasMap Parameters::vec(const std::string &name) {
  Tensor &t = at(name);
  return {t.data.data(), static_cast<Eigen::Index>(t.numel())};
}

nn::ConstBiasMap Parameters::vec(const std::string &name) const {
  const Tensor &t = at(name);
  return {t.data.data(), static_cast<Eigen::Index>(t.numel())};
}

Parameters make_parameter_layout(const ModelConfig &cfg) {
  cfg.validate();
  const int c = cfg.conv_channels, b = cfg.bottleneck_dim;
  const int width = c / cfg.res2_scale;
  Parameters p;
  p.add("frame.weight", {c, 2 * cfg.n_mels, cfg.frame_kernel});
  p.add("frame.bias", {c});
  auto add_se = [&](const std::string &prefix) {
    p.add(prefix + "fc1.weight", {b, c});
    p.add(prefix + "fc1.bias", {b});
    p.add(prefix + "fc2.weight", {c, b});
    p.add(prefix + "fc2.bias", {c});
  };
  for (int k = 0; k < cfg.num_blocks; ++k) {
    p.add(block_name(k, "in.weight"), {c, c});
    p.add(block_name(k, "in.bias"), {c});
    for (int j = 1; j < cfg.res2_scale; ++j) {
      p.add(group_name(k, j, "weight"), {width, width, cfg.res2_kernel});
      p.add(group_name(k, j, "bias"), {width});
    }
    p.add(block_name(k, "out.weight"), {c, c});
    p.add(block_name(k, "out.bias"), {c});
    add_se(block_name(k, "se."));
  }
  add_se("cta.gate.");
  p.add("cta.time.weight", {b, c});
  p.add("cta.time.bias", {b});
  p.add("cta.time.score", {b});
  p.add("cta.time.offset", {1});
  p.add("asp.weight", {b, c});
  p.add("asp.bias", {b});
  p.add("asp.score", {b});
  p.add("fc.weight", {cfg.fc_nodes, 2 * c});
  p.add("fc.bias", {cfg.fc_nodes});
  p.add("ri.weight", {cfg.logits_dim, cfg.fc_nodes});
  p.add("ri.bias", {cfg.logits_dim});
  p.add("pq.weight", {1, cfg.fc_nodes});
  p.add("pq.bias", {1});
  return p;
}

void check_parameter_shapes(const Parameters &params, const ModelConfig &cfg) {
  Parameters want = make_parameter_layout(cfg);
  if (want.size() != params.size())
    throw ShapeError("parameter count " + std::to_string(params.size()) +
                     " does not match model config (" +
                     std::to_string(want.size()) + ")");
  for (std::size_t i = 0; i < want.size(); ++i) {
    const auto &[wname, wt] = want.entries()[i];
    const auto &[name, t] = params.entries()[i];
    if (name != wname || t.shape != wt.shape)
      throw ShapeError("parameter " + name + " does not match expected " + wname +
                       " for config " + cfg.fingerprint());
  }
}

Parameters init_params(const ModelConfig &cfg, std::uint64_t seed) {
  Parameters p = make_parameter_layout(cfg);
  std::mt19937_64 rng(seed);
  for (auto &[name, t] : p.entries()) {
    if (is_zero_init(name)) continue;
    // A 1-D "score" vector acts as a (len -> 1) projection.
    std::size_t fan_in = t.shape.size() == 1
                             ? t.numel()
                             : t.numel() / static_cast<std::size_t>(t.shape[0]);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (double &v : t.data) v = dist(rng);
  }
  return p;
}

ForwardOutput forward(const FeatureMatrix &noisy, const FeatureMatrix &enhanced,
                      const Parameters &params, const ModelConfig &cfg,
                      ForwardCache *cache) {
  if (noisy.n_mels() != cfg.n_mels || enhanced.n_mels() != cfg.n_mels)
    throw ShapeError("feature dimension mismatch: expected " +
                     std::to_string(cfg.n_mels) + " mel bins");
  if (noisy.n_frames() != enhanced.n_frames())
    throw ShapeError("noisy and enhanced streams differ in length (" +
                     std::to_string(noisy.n_frames()) + " vs " +
                     std::to_string(enhanced.n_frames()) + " frames)");
  const int frames = noisy.n_frames();
  if (frames < 1) throw ShapeError("feature streams are empty");

  const int c = cfg.conv_channels;
  ForwardCache local;
  ForwardCache &fc = cache ? *cache : local;
  fc.frames = frames;

  Mat x0(2 * cfg.n_mels, frames);
  x0 << noisy.values, enhanced.values;
  fc.frame_pre = nn::conv1d_forward(x0, params.mat("frame.weight"),
                                    params.vec("frame.bias"),
                                    {2 * cfg.n_mels, c, cfg.frame_kernel, 1},
                                    &fc.frame_cols);
  Mat h = nn::relu(fc.frame_pre);

  fc.blocks.assign(cfg.num_blocks, {});
  for (int k = 0; k < cfg.num_blocks; ++k) {
    auto &blk = fc.blocks[k];
    blk.input = h;
    blk.in_pre = params.mat(block_name(k, "in.weight")) * h;
    blk.in_pre.colwise() += params.vec(block_name(k, "in.bias"));
    std::vector<nn::ConstWeightMap> gw;
    std::vector<nn::ConstBiasMap> gb;
    for (int j = 1; j < cfg.res2_scale; ++j) {
      gw.push_back(params.mat(group_name(k, j, "weight")));
      gb.push_back(params.vec(group_name(k, j, "bias")));
    }
    blk.core_out = nn::res2_core_forward(nn::relu(blk.in_pre), cfg.res2_scale,
                                         cfg.res2_kernel, cfg.res2_dilation, gw, gb,
                                         &blk.core);
    blk.out_pre = params.mat(block_name(k, "out.weight")) * blk.core_out;
    blk.out_pre.colwise() += params.vec(block_name(k, "out.bias"));
    blk.out_act = nn::relu(blk.out_pre);
    Mat se_out = nn::se_forward(blk.out_act, se_weights(params, block_name(k, "se.")),
                                &blk.se);
    h = se_out + h;
  }

  // Channel-time attention.
  fc.cta_input = h;
  fc.cta_gated = nn::se_forward(h, se_weights(params, "cta.gate."), &fc.cta_gate);
  Mat tpre = params.mat("cta.time.weight") * h;
  tpre.colwise() += params.vec("cta.time.bias");
  fc.cta_time_hidden = tpre.array().tanh();
  Vec tscore = fc.cta_time_hidden.transpose() * params.vec("cta.time.score");
  tscore.array() += params.vec("cta.time.offset")[0];
  fc.cta_time_weight = nn::sigmoid(tscore);
  fc.cta_out = fc.cta_gated.array().rowwise() * fc.cta_time_weight.transpose().array();

  fc.pooled = nn::asp_forward(
      fc.cta_out,
      {params.mat("asp.weight"), params.vec("asp.bias"), params.vec("asp.score")},
      &fc.asp);

  fc.fc_pre = params.mat("fc.weight") * fc.pooled + params.vec("fc.bias");
  fc.fc_out = fc.fc_pre.cwiseMax(0.0);

  ForwardOutput out;
  out.logits = params.mat("ri.weight") * fc.fc_out + params.vec("ri.bias");
  fc.omega_raw = nn::sigmoid(params.mat("pq.weight").row(0).dot(fc.fc_out) +
                             params.vec("pq.bias")[0]);
  out.omega_hat = std::clamp(fc.omega_raw, kOmegaEpsilon, 1.0 - kOmegaEpsilon);
  return out;
}

void backward(const ForwardCache &fc, const Parameters &params,
              const ModelConfig &cfg, const Eigen::VectorXd &d_logits,
              double d_omega, Parameters *grads) {
  if (d_logits.size() != cfg.logits_dim)
    throw ShapeError("d_logits has wrong length");
  // Heads.
  Vec d_fc_out = params.mat("ri.weight").transpose() * d_logits;
  grads->mat("ri.weight").noalias() += d_logits * fc.fc_out.transpose();
  grads->vec("ri.bias") += d_logits;
  const double d_pq = d_omega * fc.omega_raw * (1.0 - fc.omega_raw);
  d_fc_out += d_pq * params.mat("pq.weight").row(0).transpose();
  grads->mat("pq.weight").row(0) += d_pq * fc.fc_out.transpose();
  grads->vec("pq.bias")[0] += d_pq;

  Vec d_fc_pre = (fc.fc_pre.array() > 0.0).select(d_fc_out, 0.0);
  grads->mat("fc.weight").noalias() += d_fc_pre * fc.pooled.transpose();
  grads->vec("fc.bias") += d_fc_pre;
  Vec d_pooled = params.mat("fc.weight").transpose() * d_fc_pre;

  Mat d_cta_out = nn::asp_backward(
      fc.cta_out,
      {params.mat("asp.weight"), params.vec("asp.bias"), params.vec("asp.score")},
      fc.asp, d_pooled,
      {grads->mat("asp.weight"), grads->vec("asp.bias"), grads->vec("asp.score")});

  // Channel-time attention.
  const Vec &tw = fc.cta_time_weight;
  Mat d_gated = d_cta_out.array().rowwise() * tw.transpose().array();
  Vec d_tw = (d_cta_out.array() * fc.cta_gated.array()).colwise().sum().transpose();
  Vec d_tscore = d_tw.array() * tw.array() * (1.0 - tw.array());
  grads->vec("cta.time.offset")[0] += d_tscore.sum();
  grads->vec("cta.time.score").noalias() += fc.cta_time_hidden * d_tscore;
  Mat d_tpre = (params.vec("cta.time.score") * d_tscore.transpose()).array() *
               (1.0 - fc.cta_time_hidden.array().square());
  grads->mat("cta.time.weight").noalias() += d_tpre * fc.cta_input.transpose();
  grads->vec("cta.time.bias") += d_tpre.rowwise().sum();
  Mat dh = params.mat("cta.time.weight").transpose() * d_tpre;
  dh += nn::se_backward(fc.cta_input, se_weights(params, "cta.gate."), fc.cta_gate,
                        d_gated, se_grads(grads, "cta.gate."));

  for (int k = cfg.num_blocks - 1; k >= 0; --k) {
    const auto &blk = fc.blocks[k];
    Mat d_out_act = nn::se_backward(blk.out_act, se_weights(params, block_name(k, "se.")),
                                    blk.se, dh, se_grads(grads, block_name(k, "se.")));
    Mat d_out_pre = nn::relu_backward(blk.out_pre, d_out_act);
    grads->mat(block_name(k, "out.weight")).noalias() +=
        d_out_pre * blk.core_out.transpose();
    grads->vec(block_name(k, "out.bias")) += d_out_pre.rowwise().sum();
    Mat d_core = params.mat(block_name(k, "out.weight")).transpose() * d_out_pre;

    std::vector<nn::ConstWeightMap> gw;
    std::vector<nn::WeightMap> dgw;
    std::vector<nn::BiasMap> dgb;
    for (int j = 1; j < cfg.res2_scale; ++j) {
      gw.push_back(params.mat(group_name(k, j, "weight")));
      dgw.push_back(grads->mat(group_name(k, j, "weight")));
      dgb.push_back(grads->vec(group_name(k, j, "bias")));
    }
    Mat d_in_act = nn::res2_core_backward(d_core, cfg.res2_scale, cfg.res2_kernel,
                                          cfg.res2_dilation, gw, blk.core, dgw, dgb);
    Mat d_in_pre = nn::relu_backward(blk.in_pre, d_in_act);
    grads->mat(block_name(k, "in.weight")).noalias() +=
        d_in_pre * blk.input.transpose();
    grads->vec(block_name(k, "in.bias")) += d_in_pre.rowwise().sum();
    // Residual path plus the path through the block.
    dh += params.mat(block_name(k, "in.weight")).transpose() * d_in_pre;
  }

  Mat d_frame_pre = nn::relu_backward(fc.frame_pre, dh);
  grads->mat("frame.weight").noalias() += d_frame_pre * fc.frame_cols.transpose();
  grads->vec("frame.bias") += d_frame_pre.rowwise().sum();
}

}  // namespace bridge_oa
