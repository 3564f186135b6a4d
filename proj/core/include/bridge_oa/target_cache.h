// bridge_oa/target_cache.h

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

#ifndef BRIDGE_OA_TARGET_CACHE_H_
#define BRIDGE_OA_TARGET_CACHE_H_

// Training targets and their append-only JSON-Lines caches.
//
// WER-vector record:
//   {"utt_id", "backend_ids": {"enhancer", "recognizer"}, "grid": [1.0 ... 0.0],
//    "values": [wer per grid point], "errors": [edit count per grid point],
//    "ref_words": n, "created_at": "2026-01-01T00:00:00Z"}
// Perceptual-target record:
//   {"utt_id", "scorer_id", "values": [target], "sig", "bak", "created_at"}
//   or, for a failed utterance, {"utt_id", "scorer_id", "error", "created_at"}.
//
// A cache file is chosen by hashing everything its values depend on (grid and
// backend ids, or the scorer id), so switching a backend starts a new file.
// Later lines override earlier ones for the same utterance.

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bridge_oa/audio.h"
#include "bridge_oa/backends.h"
#include "bridge_oa/manifest.h"
#include "bridge_oa/supervision.h"

namespace bridge_oa {

/// $BRIDGE_OA_CACHE_DIR, or ./.bridge_oa_cache.
std::filesystem::path default_cache_root();

/// Per-utterance WERs over the OA grid, descending OA (index 0 is omega = 1).
struct WerVector {
  std::vector<double> values;
  std::vector<std::size_t> errors;
  std::size_t ref_words = 0;
};

struct PqTarget {
  double target = 0.0;
  MosScore mos;
};

struct UtteranceFailure {
  std::string utt_id;
  std::string message;
};

class WerVectorCache {
 public:
  WerVectorCache(const std::filesystem::path &root, const OaGrid &grid,
                 const std::string &enhancer_id, const std::string &recognizer_id);

  std::optional<WerVector> get(const std::string &utt_id) const;
  void put(const std::string &utt_id, const WerVector &v);
  std::size_t size() const;
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<double> grid_;
  std::string enhancer_id_, recognizer_id_;
  std::map<std::string, WerVector> entries_;
  mutable std::mutex mu_;
};

class PqTargetCache {
 public:
  PqTargetCache(const std::filesystem::path &root, const std::string &scorer_id);

  std::optional<PqTarget> get(const std::string &utt_id) const;
  void put(const std::string &utt_id, const PqTarget &t);
  void put_failure(const std::string &utt_id, const std::string &message);
  std::size_t size() const;
  std::vector<UtteranceFailure> failures() const;
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string scorer_id_;
  std::map<std::string, PqTarget> entries_;
  std::map<std::string, std::string> failures_;
  mutable std::mutex mu_;
};

/// Noisy audio of a record, honouring its channel field.
Waveform load_noisy(const ManifestRecord &rec);

/// Noisy and enhanced audio of a record, aligned to equal length.
std::pair<Waveform, Waveform> noisy_and_enhanced(const ManifestRecord &rec,
                                                 const Enhancer &enhancer);

/// Transcribes oa_blend(x, y_hat, omega) for every grid omega and scores it
/// against the record's transcript.
WerVector build_wer_vector(const ManifestRecord &rec, const OaGrid &grid,
                           const Enhancer &enhancer, const Recognizer &recognizer);

struct WerBuildResult {
  std::map<std::string, WerVector> vectors;
  std::vector<UtteranceFailure> failures;
  std::size_t reused = 0;
  std::size_t computed = 0;
};

/// Corpus version of build_wer_vector, parallel over (utterance, omega)
/// pairs. Cached utterances are reused; new results are appended to `cache`.
WerBuildResult build_wer_vectors(const std::vector<ManifestRecord> &records,
                                 const OaGrid &grid, const Enhancer &enhancer,
                                 const Recognizer &recognizer, WerVectorCache *cache,
                                 int workers = 1);

struct PqBuildResult {
  std::map<std::string, PqTarget> targets;
  std::vector<UtteranceFailure> failures;
  std::size_t reused = 0;
  std::size_t computed = 0;
};

/// Scores each noisy waveform and stores pq_target(sig, bak). Scorer failures
/// are recorded and skipped.
PqBuildResult build_pq_targets(const std::vector<ManifestRecord> &records,
                               const Scorer &scorer, PqTargetCache *cache,
                               int workers = 1);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_TARGET_CACHE_H_
