// bridge_oa/features.h

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

#ifndef BRIDGE_OA_FEATURES_H_
#define BRIDGE_OA_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bridge_oa/audio.h"

namespace bridge_oa {

/// Log-mel filterbank options. Defaults give 80 bins, 25 ms / 10 ms frames.
struct FbankConfig {
  int n_mels = 80;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  double mel_low_hz = 20.0;
  /// <= 0 means Nyquist.
  double mel_high_hz = 0.0;
  double energy_floor = 1e-10;
  bool pre_emphasis = false;
  double pre_emphasis_coeff = 0.97;
  /// Subtract the per-bin mean over time.
  bool mean_normalize = false;

  int window_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;
  void validate(int sample_rate) const;
  /// Stable identity for feature-cache keys.
  std::string fingerprint() const;
};

/// n_mels x n_frames matrix of natural-log mel energies.
struct FeatureMatrix {
  Eigen::MatrixXd values;

  int n_mels() const { return static_cast<int>(values.rows()); }
  int n_frames() const { return static_cast<int>(values.cols()); }
};

/// floor((N - window) / hop) + 1 for N >= window, else 0.
int num_frames(std::size_t num_samples, int window_samples, int hop_samples);

FeatureMatrix fbank(const Waveform &w, const FbankConfig &cfg = {});

struct AugmentPolicy {
  int max_time_mask_frames = 5;
  int max_freq_mask_channels = 4;
  int masks_per_axis = 1;
  double mask_value = 0.0;
};

/// One contiguous mask actually applied by spec_augment.
struct AppliedMask {
  enum class Axis { kTime, kFrequency } axis;
  int start;
  int width;
};

/// Returns a copy of `f` with time and frequency masks drawn from `seed`.
/// Widths are uniform on 0..max and clipped to the matrix extent.
FeatureMatrix spec_augment(const FeatureMatrix &f, const AugmentPolicy &policy,
                           std::uint64_t seed,
                           std::vector<AppliedMask> *applied = nullptr);

/// Per-utterance binary feature cache: one file per (utt id, config hash).
class FeatureCache {
 public:
  explicit FeatureCache(std::filesystem::path dir);

  std::optional<FeatureMatrix> load(const std::string &utt_id,
                                    const std::string &config_key) const;
  void store(const std::string &utt_id, const std::string &config_key,
             const FeatureMatrix &f) const;

 private:
  std::filesystem::path file_for(const std::string &utt_id,
                                 const std::string &config_key) const;
  std::filesystem::path dir_;
};

}  // namespace bridge_oa

#endif  // BRIDGE_OA_FEATURES_H_
