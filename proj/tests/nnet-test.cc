// tests/nnet-test.cc

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

#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "bridge_oa/checkpoint.h"
#include "bridge_oa/error.h"
#include "bridge_oa/layers.h"
#include "bridge_oa/nnet.h"
#include "test-util.h"

namespace bridge_oa {
namespace {

using nn::Mat;
using nn::Vec;

Mat random_mat(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Weights stored row-major as [out][in][kernel], as in Parameters.
std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double &x : v) x = g(rng);
  return v;
}

TEST(Conv1d, MatchesNaiveLoops) {
  for (int dilation : {1, 2, 3}) {
    const int in = 3, out = 4, k = 3, frames = 9;
    Mat x = random_mat(in, frames, dilation);
    auto w = random_buffer(out * in * k, 10 + dilation);
    auto b = random_buffer(out, 20 + dilation);
    nn::ConstWeightMap wm(w.data(), out, in * k);
    nn::ConstBiasMap bm(b.data(), out);
    Mat y = nn::conv1d_forward(x, wm, bm, {in, out, k, dilation});
    for (int o = 0; o < out; ++o)
      for (int t = 0; t < frames; ++t) {
        double acc = b[o];
        for (int c = 0; c < in; ++c)
          for (int j = 0; j < k; ++j) {
            const int s = t + (j - 1) * dilation;  // centred, zero padded
            if (s >= 0 && s < frames) acc += w[(o * in + c) * k + j] * x(c, s);
          }
        ASSERT_NEAR(y(o, t), acc, 1e-12);
      }
  }
}

TEST(Conv1d, BackwardIsAdjointOfForward) {
  // <conv(x), g> = <x, conv^T(g)> for the input path.
  const int in = 2, out = 3, k = 5, frames = 11;
  Mat x = random_mat(in, frames, 1);
  Mat g = random_mat(out, frames, 2);
  auto w = random_buffer(out * in * k, 3);
  std::vector<double> b(out, 0.0), dw(w.size(), 0.0), db(out, 0.0);
  nn::ConstWeightMap wm(w.data(), out, in * k);
  nn::ConstBiasMap bm(b.data(), out);
  Mat cols;
  Mat y = nn::conv1d_forward(x, wm, bm, {in, out, k, 2}, &cols);
  Mat dx = nn::conv1d_backward(cols, wm, g, {in, out, k, 2}, frames,
                               nn::WeightMap(dw.data(), out, in * k),
                               nn::BiasMap(db.data(), out));
  EXPECT_NEAR((y.array() * g.array()).sum(), (x.array() * dx.array()).sum(), 1e-10);
}

TEST(SeBlock, ForcedOpenGateIsIdentity) {
  const int c = 6, b = 3;
  Mat x = random_mat(c, 20, 4);
  auto w1 = random_buffer(b * c, 5);
  std::vector<double> b1(b, 0.0), w2(c * b, 0.0), b2(c, 50.0);
  nn::SeWeights p{nn::ConstWeightMap(w1.data(), b, c), nn::ConstBiasMap(b1.data(), b),
                  nn::ConstWeightMap(w2.data(), c, b), nn::ConstBiasMap(b2.data(), c)};
  Mat y = nn::se_forward(x, p, nullptr);
  EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(AttentiveStatPooling, UniformAttentionGivesPlainStatistics) {
  const int c = 5, b = 4, frames = 37;
  Mat x = random_mat(c, frames, 6);
  auto w = random_buffer(b * c, 7);
  std::vector<double> bias(b, 0.1), v(b, 0.0);  // zero score vector: uniform weights
  Vec out = nn::asp_forward(x,
                            {nn::ConstWeightMap(w.data(), b, c),
                             nn::ConstBiasMap(bias.data(), b), nn::ConstBiasMap(v.data(), b)},
                            nullptr);
  ASSERT_EQ(out.size(), 2 * c);
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    for (int t = 0; t < frames; ++t) mean += x(ch, t);
    mean /= frames;
    for (int t = 0; t < frames; ++t) var += (x(ch, t) - mean) * (x(ch, t) - mean);
    var /= frames;  // population variance
    EXPECT_NEAR(out[ch], mean, 1e-6);
    EXPECT_NEAR(out[c + ch], std::sqrt(var), 1e-6);
  }
}

TEST(Res2Core, GroupsAreHierarchical) {
  const int scale = 4, width = 3, k = 3, frames = 15;
  std::vector<std::vector<double>> w, bias;
  for (int j = 1; j < scale; ++j) {
    w.push_back(random_buffer(width * width * k, 30 + j));
    bias.push_back(random_buffer(width, 40 + j));
  }
  auto run = [&](const Mat &a, bool zero_kernels) {
    std::vector<std::vector<double>> wz = w;
    if (zero_kernels)
      for (auto &v : wz) std::fill(v.begin(), v.end(), 0.0);
    std::vector<nn::ConstWeightMap> wm;
    std::vector<nn::ConstBiasMap> bm;
    for (int j = 0; j < scale - 1; ++j) {
      wm.emplace_back(wz[j].data(), width, width * k);
      bm.emplace_back(bias[j].data(), width);
    }
    return nn::res2_core_forward(a, scale, k, 2, wm, bm, nullptr);
  };
  Mat a = random_mat(scale * width, frames, 8);
  for (bool zero : {false, true}) {
    Mat base = run(a, zero);
    for (int i = 0; i < scale; ++i) {
      Mat p = a;
      p.middleRows(i * width, width).array() += 1.0;
      Mat y = run(p, zero);
      for (int j = 0; j < scale; ++j) {
        const double diff =
            (y.middleRows(j * width, width) - base.middleRows(j * width, width))
                .cwiseAbs()
                .maxCoeff();
        if (j < i || (zero && j != i)) EXPECT_EQ(diff, 0.0) << i << " " << j;
      }
      // Group 0 is passed through unchanged.
      EXPECT_EQ(y.topRows(width), p.topRows(width));
    }
  }
}

TEST(Model, OutputContractAndLengthInvariance) {
  ModelConfig cfg = testing::tiny_model();
  Parameters p = init_params(cfg, 1);
  for (int frames : {50, 98, 300}) {
    ForwardOutput out = forward(testing::random_features(80, frames, frames),
                                testing::random_features(80, frames, frames + 1), p, cfg);
    EXPECT_GT(out.omega_hat, 0.0);
    EXPECT_LT(out.omega_hat, 1.0);
    ASSERT_EQ(out.logits.size(), 11);
    EXPECT_TRUE(out.logits.allFinite());
  }
  ForwardOutput one = forward(testing::random_features(80, 1, 1),
                              testing::random_features(80, 1, 2), p, cfg);
  EXPECT_EQ(one.logits.size(), 11);
}

TEST(Model, ShapeErrors) {
  ModelConfig cfg = testing::tiny_model();
  Parameters p = init_params(cfg, 1);
  EXPECT_THROW(forward(testing::random_features(80, 10, 1),
                       testing::random_features(80, 11, 2), p, cfg),
               ShapeError);
  EXPECT_THROW(forward(testing::random_features(40, 10, 1),
                       testing::random_features(40, 10, 2), p, cfg),
               ShapeError);
  FeatureMatrix empty;
  empty.values.resize(80, 0);
  EXPECT_THROW(forward(empty, empty, p, cfg), ShapeError);
}

TEST(ModelConfig, Validation) {
  ModelConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.conv_channels = 384;
  EXPECT_NO_THROW(cfg.validate());
  cfg.conv_channels = 16;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.custom_width = true;
  cfg.res2_scale = 4;
  EXPECT_NO_THROW(cfg.validate());
  cfg.res2_scale = 3;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(InitParams, DeterminismAndFanInScale) {
  ModelConfig cfg = testing::tiny_model();
  Parameters a = init_params(cfg, 7), b = init_params(cfg, 7), c = init_params(cfg, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.entries()[i].second.data, b.entries()[i].second.data);
    any_diff |= a.entries()[i].second.data != c.entries()[i].second.data;
  }
  EXPECT_TRUE(any_diff);
  for (const auto &[name, t] : a.entries())
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0)
      for (double v : t.data) EXPECT_EQ(v, 0.0) << name;

  // frame.weight: 16 x (160 * 5) = 12800 draws with fan-in 800.
  const auto &w = a.at("frame.weight").data;
  ASSERT_GE(w.size(), 10000u);
  double sum = 0.0, sq = 0.0;
  for (double v : w) sum += v, sq += v * v;
  const double mean = sum / w.size();
  const double sd = std::sqrt(sq / w.size() - mean * mean);
  EXPECT_NEAR(sd / std::sqrt(2.0 / 800.0), 1.0, 0.2);
}

TEST(Model, GradientMatchesFiniteDifferences) {
  auto r = testing::check_model_gradient(testing::tiny_model(), 12, 11);
  EXPECT_GT(r.checked, 10000u);
  EXPECT_GE(r.pass_fraction(), 0.99) << "worst relative error " << r.worst;
}

TEST(Checkpoint, RoundTripFloat64IsBitwise) {
  testing::TempDir dir;
  ModelConfig cfg = testing::tiny_model();
  Parameters p = init_params(cfg, 3);
  std::map<std::string, std::string> meta = {{"strategy", "ri"}, {"note", "a b\nc"}};
  save_checkpoint(dir.path() / "m.ckpt", p, cfg, meta, TensorDtype::kFloat64);
  Checkpoint c = load_checkpoint(dir.path() / "m.ckpt", cfg);
  EXPECT_EQ(c.meta, meta);
  EXPECT_EQ(c.dtype, TensorDtype::kFloat64);
  EXPECT_EQ(c.config.fingerprint(), cfg.fingerprint());
  ASSERT_EQ(c.params.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(c.params.entries()[i].first, p.entries()[i].first);
    EXPECT_EQ(c.params.entries()[i].second.shape, p.entries()[i].second.shape);
    EXPECT_EQ(c.params.entries()[i].second.data, p.entries()[i].second.data);
  }
}

TEST(Checkpoint, Float32IsBitwiseForRepresentableValues) {
  testing::TempDir dir;
  ModelConfig cfg = testing::tiny_model();
  Parameters p = init_params(cfg, 3);
  Parameters q = p;
  for (auto &[name, t] : q.entries())
    for (double &v : t.data) v = static_cast<float>(v);
  save_checkpoint(dir.path() / "a.ckpt", q, cfg);
  Checkpoint c = load_checkpoint(dir.path() / "a.ckpt");
  EXPECT_EQ(c.dtype, TensorDtype::kFloat32);
  for (std::size_t i = 0; i < q.size(); ++i)
    EXPECT_EQ(c.params.entries()[i].second.data, q.entries()[i].second.data);

  save_checkpoint(dir.path() / "b.ckpt", p, cfg);
  Checkpoint d = load_checkpoint(dir.path() / "b.ckpt");
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.entries()[i].second.data.size(); ++j) {
      const double v = p.entries()[i].second.data[j];
      ASSERT_LE(std::abs(d.params.entries()[i].second.data[j] - v), 1e-7 * std::abs(v));
    }
}

TEST(Checkpoint, CorruptionAndShapeErrors) {
  testing::TempDir dir;
  ModelConfig cfg = testing::tiny_model();
  Parameters p = init_params(cfg, 3);
  const auto path = dir.path() / "m.ckpt";
  save_checkpoint(path, p, cfg);

  ModelConfig other = cfg;
  other.logits_dim = 21;
  EXPECT_THROW(load_checkpoint(path, other), ShapeError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 9);
  EXPECT_THROW(load_checkpoint(path), ChecksumError);

  save_checkpoint(path, p, cfg);
  {
    std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
    fs.seekp(static_cast<std::streamoff>(size / 2));
    fs.put('\x55');
  }
  EXPECT_THROW(load_checkpoint(path), ChecksumError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace bridge_oa
