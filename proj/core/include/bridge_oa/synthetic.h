// bridge_oa/synthetic.h

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

#ifndef BRIDGE_OA_SYNTHETIC_H_
#define BRIDGE_OA_SYNTHETIC_H_

// A small synthetic corpus for tests and demos. Each "word" is a pure tone
// from a fixed vocabulary; an utterance is a noise-only lead followed by a
// sequence of word tones, mixed with white noise at a random SNR. Nothing
// here resembles real speech, it only exercises the plumbing end to end.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bridge_oa/audio.h"
#include "bridge_oa/backends.h"
#include "bridge_oa/manifest.h"

namespace bridge_oa {

struct SyntheticConfig {
  int num_utterances = 200;
  double min_snr_db = -5.0;
  double max_snr_db = 20.0;
  int words_per_utterance = 10;
  double word_seconds = 0.08;
  /// Noise-only lead, so that noise-estimating enhancers have something to
  /// look at.
  double lead_seconds = 0.2;
  double tone_amplitude = 0.1;
  int sample_rate = kDefaultSampleRate;
  std::uint64_t seed = 1;
  std::string subset = "tr_simu";
  std::string id_prefix = "syn";

  void validate() const;
};

struct SyntheticUtterance {
  std::string utt_id;
  Waveform clean;
  Waveform noisy;
  /// Realised SNR of noisy against clean.
  double snr_db = 0.0;
  std::string transcript;
};

/// The tone vocabulary: word name and frequency in Hz.
const std::vector<std::pair<std::string, double>> &synthetic_vocabulary();

std::vector<SyntheticUtterance> make_synthetic_corpus(const SyntheticConfig &cfg);

/// Writes clean/, noisy/ and (when `enhancer` is given) enhanced/ WAVs under
/// `dir` and returns the matching manifest records (also written to
/// dir/manifest.jsonl). Paths in the records are absolute.
std::vector<ManifestRecord> write_synthetic_corpus(
    const std::vector<SyntheticUtterance> &utts, const std::filesystem::path &dir,
    const Enhancer *enhancer, const std::string &subset = "tr_simu");

/// Word errors a scripted recognizer makes at `omega` when its best
/// coefficient is `best`: one substitution per grid step of distance.
std::size_t scripted_error_count(double omega, double best, const OaGrid &grid);

/// Writes a builtin:scripted table in which utterance u, blended at grid
/// coefficient w, is recognised with scripted_error_count(w, best(u))
/// leading words substituted. Every utterance needs at least grid.size() - 1
/// reference words.
void write_scripted_asr_table(const std::vector<ManifestRecord> &records,
                              const OaGrid &grid,
                              const std::function<double(const ManifestRecord &)> &best,
                              const std::filesystem::path &path);

/// Grid point closest to (snr + 5) / 25, clamped to [0, 1]: the preferred
/// coefficient of the synthetic scripted recognizer.
double synthetic_best_omega(double snr_db, const OaGrid &grid);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_SYNTHETIC_H_
