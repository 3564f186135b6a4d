// src/layers.cc

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

#include "bridge_oa/layers.h"

#include <cmath>

namespace bridge_oa::nn {

Vec sigmoid(const Vec &x) {
  Vec y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

Mat relu(const Mat &x) { return x.cwiseMax(0.0); }

Mat relu_backward(const Mat &pre, const Mat &grad) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

Mat im2col(const Mat &x, int kernel, int dilation) {
  const int channels = static_cast<int>(x.rows());
  const int frames = static_cast<int>(x.cols());
  const int half = (kernel - 1) / 2;
  Mat cols = Mat::Zero(static_cast<Eigen::Index>(channels) * kernel, frames);
  for (int k = 0; k < kernel; ++k) {
    const int offset = (k - half) * dilation;
    const int t0 = std::max(0, -offset);
    const int t1 = std::min(frames, frames - offset);
    if (t1 <= t0) continue;
    for (int c = 0; c < channels; ++c)
      cols.row(c * kernel + k).segment(t0, t1 - t0) =
          x.row(c).segment(t0 + offset, t1 - t0);
  }
  return cols;
}

Mat col2im(const Mat &cols, int in_channels, int kernel, int dilation, int frames) {
  const int half = (kernel - 1) / 2;
  Mat x = Mat::Zero(in_channels, frames);
  for (int k = 0; k < kernel; ++k) {
    const int offset = (k - half) * dilation;
    const int t0 = std::max(0, -offset);
    const int t1 = std::min(frames, frames - offset);
    if (t1 <= t0) continue;
    for (int c = 0; c < in_channels; ++c)
      x.row(c).segment(t0 + offset, t1 - t0) +=
          cols.row(c * kernel + k).segment(t0, t1 - t0);
  }
  return x;
}

Mat conv1d_forward(const Mat &x, const ConstWeightMap &w, const ConstBiasMap &b,
                   const Conv1dShape &shape, Mat *cols_out) {
  Mat cols = im2col(x, shape.kernel, shape.dilation);
  Mat y = w * cols;
  y.colwise() += b;
  if (cols_out) *cols_out = std::move(cols);
  return y;
}

Mat conv1d_backward(const Mat &cols, const ConstWeightMap &w, const Mat &grad_out,
                    const Conv1dShape &shape, int frames, WeightMap dw, BiasMap db) {
  dw.noalias() += grad_out * cols.transpose();
  db += grad_out.rowwise().sum();
  Mat dcols = w.transpose() * grad_out;
  return col2im(dcols, shape.in_channels, shape.kernel, shape.dilation, frames);
}

Mat se_forward(const Mat &x, const SeWeights &p, SeCache *cache) {
  Vec mean = x.rowwise().mean();
  Vec hidden_pre = p.w1 * mean + p.b1;
  Vec hidden = hidden_pre.cwiseMax(0.0);
  Vec gate = sigmoid(Vec(p.w2 * hidden + p.b2));
  Mat y = x.array().colwise() * gate.array();
  if (cache) {
    cache->mean = std::move(mean);
    cache->hidden_pre = std::move(hidden_pre);
    cache->gate = std::move(gate);
  }
  return y;
}

Mat se_backward(const Mat &x, const SeWeights &p, const SeCache &cache,
                const Mat &grad_out, SeGrads g) {
  Mat dx = grad_out.array().colwise() * cache.gate.array();
  Vec dgate = (grad_out.array() * x.array()).rowwise().sum();
  Vec da2 = dgate.array() * cache.gate.array() * (1.0 - cache.gate.array());
  Vec hidden = cache.hidden_pre.cwiseMax(0.0);
  g.w2.noalias() += da2 * hidden.transpose();
  g.b2 += da2;
  Vec dhidden = p.w2.transpose() * da2;
  Vec da1 = (cache.hidden_pre.array() > 0.0).select(dhidden, 0.0);
  g.w1.noalias() += da1 * cache.mean.transpose();
  g.b1 += da1;
  Vec dmean = p.w1.transpose() * da1;
  dx.colwise() += dmean / static_cast<double>(x.cols());
  return dx;
}

Vec asp_forward(const Mat &x, const AspWeights &p, AspCache *cache) {
  Mat pre = p.w * x;
  pre.colwise() += p.b;
  Mat hidden = pre.array().tanh();
  Vec scores = hidden.transpose() * p.v;
  Vec alpha = (scores.array() - scores.maxCoeff()).exp();
  alpha /= alpha.sum();
  Vec mean = x * alpha;
  Mat centered = x.colwise() - mean;
  Vec var = centered.array().square().matrix() * alpha;
  Vec stddev = var.cwiseMax(kAspVarianceFloor).cwiseSqrt();
  Vec out(2 * x.rows());
  out << mean, stddev;
  if (cache) {
    cache->hidden = std::move(hidden);
    cache->alpha = std::move(alpha);
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->stddev = std::move(stddev);
  }
  return out;
}

Mat asp_backward(const Mat &x, const AspWeights &p, const AspCache &cache,
                 const Vec &grad_out, AspGrads g) {
  const Eigen::Index channels = x.rows();
  Vec dmean = grad_out.head(channels);
  Vec dstd = grad_out.tail(channels);
  Vec dvar(channels);
  for (Eigen::Index c = 0; c < channels; ++c)
    dvar[c] = cache.var[c] > kAspVarianceFloor ? dstd[c] / (2.0 * cache.stddev[c]) : 0.0;

  Mat centered = x.colwise() - cache.mean;
  // d mean / d x and d var / d x; the mean's own dependence cancels in var.
  Mat dx = dmean * cache.alpha.transpose();
  dx += 2.0 * ((centered.array().colwise() * dvar.array()).rowwise() *
               cache.alpha.transpose().array()).matrix();
  Vec dalpha = x.transpose() * dmean +
               centered.array().square().matrix().transpose() * dvar;
  Vec dscores = cache.alpha.array() * (dalpha.array() - cache.alpha.dot(dalpha));

  g.v.noalias() += cache.hidden * dscores;
  Mat dpre = (p.v * dscores.transpose()).array() *
             (1.0 - cache.hidden.array().square());
  g.w.noalias() += dpre * x.transpose();
  g.b += dpre.rowwise().sum();
  dx.noalias() += p.w.transpose() * dpre;
  return dx;
}

Mat res2_core_forward(const Mat &a, int scale, int kernel, int dilation,
                      const std::vector<ConstWeightMap> &w,
                      const std::vector<ConstBiasMap> &b, Res2CoreCache *cache) {
  const int width = static_cast<int>(a.rows()) / scale;
  const int frames = static_cast<int>(a.cols());
  const Conv1dShape shape{width, width, kernel, dilation};
  Mat y(a.rows(), frames);
  y.topRows(width) = a.topRows(width);
  if (cache) {
    cache->cols.assign(scale - 1, Mat());
    cache->pre.assign(scale - 1, Mat());
  }
  Mat prev;
  for (int j = 1; j < scale; ++j) {
    Mat u = a.middleRows(j * width, width);
    if (j >= 2) u += prev;
    Mat cols;
    Mat pre = conv1d_forward(u, w[j - 1], b[j - 1], shape, &cols);
    prev = relu(pre);
    y.middleRows(j * width, width) = prev;
    if (cache) {
      cache->cols[j - 1] = std::move(cols);
      cache->pre[j - 1] = std::move(pre);
    }
  }
  return y;
}

Mat res2_core_backward(const Mat &grad_out, int scale, int kernel, int dilation,
                       const std::vector<ConstWeightMap> &w,
                       const Res2CoreCache &cache, std::vector<WeightMap> &dw,
                       std::vector<BiasMap> &db) {
  const int width = static_cast<int>(grad_out.rows()) / scale;
  const int frames = static_cast<int>(grad_out.cols());
  const Conv1dShape shape{width, width, kernel, dilation};
  Mat da(grad_out.rows(), frames);
  da.topRows(width) = grad_out.topRows(width);
  Mat carry = Mat::Zero(width, frames);  // gradient flowing into y(j) from u(j+1)
  for (int j = scale - 1; j >= 1; --j) {
    Mat dy = grad_out.middleRows(j * width, width) + carry;
    Mat dpre = relu_backward(cache.pre[j - 1], dy);
    Mat du = conv1d_backward(cache.cols[j - 1], w[j - 1], dpre, shape, frames,
                             dw[j - 1], db[j - 1]);
    da.middleRows(j * width, width) = du;
    if (j >= 2)
      carry = du;
    else
      carry.setZero();
  }
  return da;
}

}  // namespace bridge_oa::nn
