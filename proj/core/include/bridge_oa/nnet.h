// bridge_oa/nnet.h

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

#ifndef BRIDGE_OA_NNET_H_
#define BRIDGE_OA_NNET_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bridge_oa/features.h"
#include "bridge_oa/layers.h"

namespace bridge_oa {

/// Shape of the bridging network.
///
///   noisy fbank ---+
///                  +--> frame conv (2*n_mels -> conv_channels, kernel 5)
///   enhanced fbank-+      -> [Res2Block + SE-Block] x num_blocks (residual)
///                         -> channel-time attention (SE channel gate times a
///                            sigmoid additive attention weight per frame)
///                         -> attentive statistics pooling (mean ++ stddev)
///                         -> FC(fc_nodes) + ReLU
///                         -> recognition head: linear -> logits[logits_dim]
///                         -> quality head: linear -> sigmoid -> omega_hat
struct ModelConfig {
  int conv_channels = 256;
  int bottleneck_dim = 256;
  int res2_scale = 8;
  int fc_nodes = 384;
  int logits_dim = 11;
  int n_mels = 80;
  int frame_kernel = 5;
  int res2_kernel = 3;
  int res2_dilation = 2;
  int num_blocks = 1;
  /// When false, conv_channels must be 256 or 384.
  bool custom_width = false;

  /// conv_channels = 16, scale 4 and narrow heads; for tests and desk runs.
  static ModelConfig tiny();

  void validate() const;
  std::string fingerprint() const;
};

/// Dense float64 tensor, row-major.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  std::size_t numel() const { return data.size(); }
};

/// Named tensors in a fixed enumeration order (insertion order).
class Parameters {
 public:
  Tensor &add(const std::string &name, std::vector<int> shape);

  bool contains(const std::string &name) const { return index_.count(name) != 0; }
  Tensor &at(const std::string &name);
  const Tensor &at(const std::string &name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t total_numel() const;
  const std::vector<std::pair<std::string, Tensor>> &entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>> &entries() { return entries_; }

  /// Same names and shapes, all zeros.
  Parameters zeros_like() const;
  void set_zero();
  /// this += scale * other; shapes must match.
  void add_scaled(const Parameters &other, double scale);

  /// Row-major [shape[0]] x [product of the rest] view.
  nn::WeightMap mat(const std::string &name);
  nn::ConstWeightMap mat(const std::string &name) const;
  nn::BiasMap vec(const std::string &name);
  nn::ConstBiasMap vec(const std::string &name) const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ForwardOutput {
  /// Strictly inside (0, 1).
  double omega_hat = 0.5;
  Eigen::VectorXd logits;
};

/// Intermediate activations kept by forward() for backward().
struct ForwardCache {
  struct Block {
    nn::Mat input;
    nn::Mat in_pre;
    nn::Res2CoreCache core;
    nn::Mat core_out;
    nn::Mat out_cols;
    nn::Mat out_pre;
    nn::Mat out_act;
    nn::SeCache se;
  };
  int frames = 0;
  nn::Mat frame_cols;
  nn::Mat frame_pre;
  std::vector<Block> blocks;
  nn::Mat cta_input;
  nn::SeCache cta_gate;
  nn::Mat cta_gated;
  nn::Mat cta_time_hidden;
  nn::Vec cta_time_weight;
  nn::Mat cta_out;
  nn::AspCache asp;
  nn::Vec pooled;
  nn::Vec fc_pre;
  nn::Vec fc_out;
  double omega_raw = 0.5;
};

/// Weights ~ N(0, 2 / fan_in), biases zero. Deterministic given seed.
Parameters init_params(const ModelConfig &cfg, std::uint64_t seed);

/// Zero tensors with the names and shapes implied by `cfg`.
Parameters make_parameter_layout(const ModelConfig &cfg);

/// Throws ShapeError if `params` does not match `cfg`.
void check_parameter_shapes(const Parameters &params, const ModelConfig &cfg);

ForwardOutput forward(const FeatureMatrix &noisy, const FeatureMatrix &enhanced,
                      const Parameters &params, const ModelConfig &cfg,
                      ForwardCache *cache = nullptr);

/// Accumulates into `grads` the gradient of a loss whose partials with respect
/// to the outputs are `d_logits` and `d_omega`.
void backward(const ForwardCache &cache, const Parameters &params,
              const ModelConfig &cfg, const Eigen::VectorXd &d_logits,
              double d_omega, Parameters *grads);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_NNET_H_
