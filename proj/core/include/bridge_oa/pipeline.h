// bridge_oa/pipeline.h

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

#ifndef BRIDGE_OA_PIPELINE_H_
#define BRIDGE_OA_PIPELINE_H_

// Enhance, bridge, blend, recognise; and the corpus reports built on it.
// All corpus WERs are pooled: total edit errors over total reference words.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bridge_oa/audio.h"
#include "bridge_oa/backends.h"
#include "bridge_oa/features.h"
#include "bridge_oa/manifest.h"
#include "bridge_oa/nnet.h"
#include "bridge_oa/target_cache.h"
#include "bridge_oa/training.h"

namespace bridge_oa {

/// A trained network plus everything needed to run it.
struct BridgeModel {
  ModelConfig config;
  Parameters params;
  FbankConfig fbank;
  Strategy strategy = Strategy::kCombined;
  double k = 0.1;

  /// Loads a checkpoint; strategy and OA step default to the ones stored in
  /// its metadata.
  static BridgeModel load(const std::filesystem::path &checkpoint,
                          std::optional<Strategy> strategy = std::nullopt,
                          const FbankConfig &fbank = {});
  std::string fingerprint() const;
};

/// Where the blending coefficient comes from: a fixed value or a model.
struct OmegaSource {
  std::optional<double> fixed;
  const BridgeModel *model = nullptr;

  static OmegaSource constant(double omega) { return {omega, nullptr}; }
  static OmegaSource from(const BridgeModel &m) { return {std::nullopt, &m}; }
  std::string describe() const;
};

struct InferenceResult {
  std::string utt_id;
  double omega = 0.0;
  Waveform blended;
  std::string hypothesis;
};

/// Errors are rethrown as BackendError tagged with the utterance id and the
/// failing stage (load, enhance, features, bridge, blend, recognise).
InferenceResult infer_utterance(const ManifestRecord &rec, const OmegaSource &source,
                                const Enhancer &enhancer, const Recognizer &recognizer);

/// Only the coefficient (no recognition); used by histogram.
double infer_omega(const ManifestRecord &rec, const BridgeModel &model,
                   const Enhancer &enhancer);

struct WerTally {
  std::size_t errors = 0;
  std::size_t ref_words = 0;
  std::size_t utterances = 0;
  /// errors / ref_words, 0 for an empty tally.
  double wer() const;
  void add(std::size_t e, std::size_t n);
};

struct UtteranceRow {
  std::string utt_id;
  std::string subset;
  double omega = 0.0;
  std::size_t errors = 0;
  std::size_t ref_words = 0;
  double wer = 0.0;
  std::string hypothesis;
};

struct EvalReport {
  std::map<std::string, WerTally> subsets;
  WerTally overall;
  std::vector<UtteranceRow> rows;
  std::vector<UtteranceFailure> failures;
  std::string fingerprint;
};

/// Rows appear in manifest order; failed utterances are excluded from every
/// tally and listed in `failures`.
EvalReport evaluate(const std::vector<ManifestRecord> &records, const OmegaSource &source,
                    const Enhancer &enhancer, const Recognizer &recognizer, int workers = 1);

struct SweepRow {
  double omega = 0.0;
  WerTally tally;
};

struct SweepReport {
  /// Descending OA order, one row per grid point.
  std::vector<SweepRow> rows;
  std::vector<UtteranceFailure> failures;
  std::size_t reused = 0;
  std::size_t computed = 0;
  std::string fingerprint;
};

/// Pooled WER at every grid coefficient. Per-utterance WER vectors are taken
/// from / added to `cache` when given.
SweepReport sweep(const std::vector<ManifestRecord> &records, const OaGrid &grid,
                  const Enhancer &enhancer, const Recognizer &recognizer,
                  WerVectorCache *cache = nullptr, int workers = 1);

struct Histogram {
  /// bins + 1 edges on [0, 1].
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t total() const;
};

/// Uniform bins on [0, 1]; each bin is [lo, hi) except the last, [lo, 1].
/// Throws InvalidArgument for values outside [0, 1].
Histogram histogram(const std::vector<double> &omegas, int bins = 10);

/// Pretty-printed JSON documents.
std::string to_json(const EvalReport &r);
std::string to_json(const SweepReport &r);
std::string to_json(const Histogram &h);

/// Aligned plain-text tables.
std::string format_table(const EvalReport &r, bool per_utterance = false);
std::string format_table(const SweepReport &r);
std::string format_table(const Histogram &h, int bar_width = 40);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_PIPELINE_H_
