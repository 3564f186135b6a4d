// bridge_oa/audio.h

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

#ifndef BRIDGE_OA_AUDIO_H_
#define BRIDGE_OA_AUDIO_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bridge_oa {

inline constexpr int kDefaultSampleRate = 16000;

/// Zero-based index of the fifth microphone of a six-channel array
/// recording; the pipeline default when a multichannel file is read.
inline constexpr int kFifthMicChannel = 4;

/// Mono signal with real amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  /// Throws InvalidArgument unless sample_rate > 0 and all samples are finite.
  void validate() const;
};

/// Reads a RIFF/WAVE file (16-bit PCM or 32-bit float). Integer samples are
/// mapped to v / 32768. A multichannel file requires `channel`; a mono file
/// accepts only channel 0 (or none).
Waveform load_wav(const std::filesystem::path &path,
                  std::optional<int> channel = std::nullopt);

/// Writes 16-bit PCM mono; samples are clipped to the representable range.
void save_wav(const Waveform &w, const std::filesystem::path &path);

/// In-memory forms of the above, used by the HTTP adapters.
std::string encode_wav(const Waveform &w);
Waveform decode_wav(std::string_view bytes,
                    std::optional<int> channel = std::nullopt);

/// Truncates both signals to the shorter length. Rates must match and the
/// length difference must not exceed `tolerance_seconds`.
std::pair<Waveform, Waveform> align_pair(const Waveform &noisy,
                                         const Waveform &enhanced,
                                         double tolerance_seconds = 0.5);

/// Observation addition: omega * noisy + (1 - omega) * enhanced, per sample.
Waveform oa_blend(const Waveform &noisy, const Waveform &enhanced,
                  double omega);

/// Uniform grid of OA coefficients 0, k, 2k, ..., 1.
class OaGrid {
 public:
  /// Throws InvalidArgument unless 0 < k <= 0.1 and 1/k is integral.
  explicit OaGrid(double k);

  double step() const { return step_; }
  std::size_t size() const { return coefficients_.size(); }
  /// Ascending, first exactly 0, last exactly 1.
  const std::vector<double> &ascending() const { return coefficients_; }
  /// Descending order; index 0 is omega = 1.0. This is the ordering used
  /// by WER vectors and recognition logits.
  std::vector<double> descending() const;
  double descending_at(std::size_t i) const {
    return coefficients_[coefficients_.size() - 1 - i];
  }
  /// Index (descending order) of the grid point closest to omega; ties go to
  /// the larger coefficient.
  std::size_t nearest_descending_index(double omega) const;
  /// Stable textual identity used in cache keys.
  std::string fingerprint() const;

 private:
  double step_;
  std::vector<double> coefficients_;
};

inline OaGrid oa_grid(double k) { return OaGrid(k); }

/// Signal-to-noise ratio in dB of `estimate` against `reference`
/// (10 log10 |ref|^2 / |ref - est|^2) over the common prefix.
double snr_db(std::span<const double> reference, std::span<const double> estimate);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_AUDIO_H_
