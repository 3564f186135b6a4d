// bridge_oa/layers.h

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

#ifndef BRIDGE_OA_LAYERS_H_
#define BRIDGE_OA_LAYERS_H_

// Building blocks of the bridging network. Activations are (channels x time)
// column-major matrices; weights are row-major [out][in] (conv: [out][in][tap]).
// Every forward has a matching backward that accumulates parameter gradients
// and returns the gradient w.r.t. its input.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace bridge_oa::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<RowMat>;
using ConstWeightMap = Eigen::Map<const RowMat>;
using BiasMap = Eigen::Map<Vec>;
using ConstBiasMap = Eigen::Map<const Vec>;

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
Vec sigmoid(const Vec &x);
Mat relu(const Mat &x);
/// g * (x > 0), elementwise.
Mat relu_backward(const Mat &pre, const Mat &grad);

/// Zero-padded ("same") 1-D convolution over time with odd kernel.
struct Conv1dShape {
  int in_channels;
  int out_channels;
  int kernel;
  int dilation = 1;
};

Mat im2col(const Mat &x, int kernel, int dilation);
Mat col2im(const Mat &cols, int in_channels, int kernel, int dilation, int frames);

Mat conv1d_forward(const Mat &x, const ConstWeightMap &w, const ConstBiasMap &b,
                   const Conv1dShape &shape, Mat *cols_out = nullptr);
/// `cols` is the im2col matrix saved by the forward pass.
Mat conv1d_backward(const Mat &cols, const ConstWeightMap &w, const Mat &grad_out,
                    const Conv1dShape &shape, int frames, WeightMap dw, BiasMap db);

/// Squeeze-excitation gate: g = sigmoid(W2 relu(W1 mean_t(x) + b1) + b2),
/// y = x scaled per channel by g.
struct SeWeights {
  ConstWeightMap w1;
  ConstBiasMap b1;
  ConstWeightMap w2;
  ConstBiasMap b2;
};
struct SeGrads {
  WeightMap w1;
  BiasMap b1;
  WeightMap w2;
  BiasMap b2;
};
struct SeCache {
  Vec mean;
  Vec hidden_pre;
  Vec gate;
};
Mat se_forward(const Mat &x, const SeWeights &p, SeCache *cache);
Mat se_backward(const Mat &x, const SeWeights &p, const SeCache &cache,
                const Mat &grad_out, SeGrads g);

/// Attentive statistics pooling. Scores e_t = v . tanh(W x_t + b), weights
/// alpha = softmax(e), output [sum alpha x; sqrt(sum alpha (x - mean)^2)].
struct AspWeights {
  ConstWeightMap w;
  ConstBiasMap b;
  ConstBiasMap v;
};
struct AspGrads {
  WeightMap w;
  BiasMap b;
  BiasMap v;
};
struct AspCache {
  Mat hidden;  // tanh activations, bottleneck x T
  Vec alpha;
  Vec mean;
  Vec var;
  Vec stddev;
};
inline constexpr double kAspVarianceFloor = 1e-12;
Vec asp_forward(const Mat &x, const AspWeights &p, AspCache *cache);
Mat asp_backward(const Mat &x, const AspWeights &p, const AspCache &cache,
                 const Vec &grad_out, AspGrads g);

/// Hierarchical split of a Res2 block: channels are cut into `scale` groups,
/// y1 = a1, y2 = relu(conv(a2)), yj = relu(conv(aj + y(j-1))) for j >= 3.
struct Res2CoreCache {
  std::vector<Mat> cols;  // per convolved group
  std::vector<Mat> pre;   // pre-activation per convolved group
};
Mat res2_core_forward(const Mat &a, int scale, int kernel, int dilation,
                      const std::vector<ConstWeightMap> &w,
                      const std::vector<ConstBiasMap> &b, Res2CoreCache *cache);
Mat res2_core_backward(const Mat &grad_out, int scale, int kernel, int dilation,
                       const std::vector<ConstWeightMap> &w,
                       const Res2CoreCache &cache, std::vector<WeightMap> &dw,
                       std::vector<BiasMap> &db);

}  // namespace bridge_oa::nn

#endif  // BRIDGE_OA_LAYERS_H_
