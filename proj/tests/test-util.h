// tests/test-util.h

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

#ifndef BRIDGE_OA_TESTS_TEST_UTIL_H_
#define BRIDGE_OA_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bridge_oa/audio.h"
#include "bridge_oa/manifest.h"
#include "bridge_oa/nnet.h"
#include "bridge_oa/subprocess.h"
#include "bridge_oa/supervision.h"

namespace bridge_oa::testing {

using bridge_oa::TempDir;

inline Waveform random_waveform(std::size_t n, std::uint64_t seed, double amp = 0.5,
                                int rate = kDefaultSampleRate) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (double &s : w.samples) s = u(rng);
  return w;
}

inline FeatureMatrix random_features(int mels, int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(-3.0, 1.5);
  FeatureMatrix f;
  f.values.resize(mels, frames);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = g(rng);
  return f;
}

/// The small network used throughout the tests.
inline ModelConfig tiny_model(int n_mels = 80) {
  ModelConfig c = ModelConfig::tiny();
  c.n_mels = n_mels;
  return c;
}

inline ManifestRecord record(const std::string &id, const std::filesystem::path &noisy,
                             const std::string &text, const std::string &subset = "et_real") {
  ManifestRecord r;
  r.utt_id = id;
  r.noisy_path = noisy;
  r.transcript = text;
  r.subset = subset;
  return r;
}

struct GradientCheckResult {
  std::size_t checked = 0;
  std::size_t passed = 0;
  double worst = 0.0;
  double pass_fraction() const { return checked ? double(passed) / checked : 0.0; }
};

/// Compares the analytic gradient of L_PQ + L_RI through the whole network
/// with central differences, one parameter at a time. The relative error is
/// |a - n| / max(|a|, |n|, abs_floor); abs_floor keeps round-off on
/// essentially-zero gradients from counting as a mismatch.
inline GradientCheckResult check_model_gradient(const ModelConfig &cfg, int frames,
                                                std::uint64_t seed, double tol = 1e-2,
                                                double h = 1e-5, double abs_floor = 1e-6) {
  Parameters params = init_params(cfg, seed);
  FeatureMatrix noisy = random_features(cfg.n_mels, frames, seed + 1);
  FeatureMatrix enh = random_features(cfg.n_mels, frames, seed + 2);
  std::mt19937_64 rng(seed + 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double target = u(rng);
  std::vector<double> wers(cfg.logits_dim);
  for (double &w : wers) w = u(rng);

  auto loss = [&](const Parameters &p, Eigen::VectorXd *d_logits, double *d_omega,
                  ForwardCache *cache) {
    ForwardOutput out = forward(noisy, enh, p, cfg, cache);
    std::vector<double> logits(out.logits.data(), out.logits.data() + out.logits.size());
    const double l = loss_pq(out.omega_hat, target) + loss_ri(logits, wers, d_logits);
    if (d_omega) *d_omega = 2.0 * (out.omega_hat - target);
    return l;
  };

  ForwardCache cache;
  Eigen::VectorXd d_logits;
  double d_omega = 0.0;
  loss(params, &d_logits, &d_omega, &cache);
  Parameters grads = params.zeros_like();
  backward(cache, params, cfg, d_logits, d_omega, &grads);

  GradientCheckResult r;
  for (std::size_t e = 0; e < params.entries().size(); ++e) {
    auto &data = params.entries()[e].second.data;
    const auto &g = grads.entries()[e].second.data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      const double lp = loss(params, nullptr, nullptr, nullptr);
      data[i] = keep - h;
      const double lm = loss(params, nullptr, nullptr, nullptr);
      data[i] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      const double err = std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), abs_floor});
      ++r.checked;
      if (err < tol) ++r.passed;
      r.worst = std::max(r.worst, err);
    }
  }
  return r;
}

}  // namespace bridge_oa::testing

#endif  // BRIDGE_OA_TESTS_TEST_UTIL_H_
