// bridge_oa/backends.h

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

#ifndef BRIDGE_OA_BACKENDS_H_
#define BRIDGE_OA_BACKENDS_H_

// Adapters for the frozen enhancer, recognizer and quality scorer.
//
// Descriptor strings (as accepted by BackendDescriptor::parse):
//
//   builtin:identity               enhancer returning its input
//   builtin:spectral-subtraction   toy enhancer (power spectral subtraction)
//   builtin:oracle                 recognizer returning the reference text
//   builtin:scripted=<table.tsv>   recognizer reading "<utt>\t<omega>\t<text>"
//   builtin:synthetic-snr          scorer: sig = clamp(3 + s/20), bak =
//                                  clamp(3 + s/10), s = SNR in dB
//   precomputed                    enhancer reading the record's enhanced_path
//   cmd:<template>                 external command (see below)
//   http://host:port/path          HTTP endpoint (see below)
//
// External commands run through /bin/sh. Placeholders: {input_wav},
// {output_wav} (enhancer), {utt_id}. The recognizer prints the hypothesis on
// stdout, the scorer prints "sig=<f> bak=<f>". A nonzero exit is a failure.
//
// HTTP endpoints receive the WAV bytes by POST (Content-Type audio/wav,
// header X-Utterance-Id) and answer JSON: {"wav_base64": "..."} (enhancer),
// {"text": "..."} (recognizer), {"sig": f, "bak": f} (scorer).

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "bridge_oa/audio.h"
#include "bridge_oa/manifest.h"
#include "bridge_oa/supervision.h"

namespace bridge_oa {

enum class BackendKind { kEnhancer, kRecognizer, kScorer };
enum class BackendMode { kBuiltin, kPrecomputed, kExternalCommand, kHttp };

std::string to_string(BackendKind kind);

struct BackendDescriptor {
  BackendKind kind = BackendKind::kEnhancer;
  /// Stable identity; part of every cache key.
  std::string id;
  BackendMode mode = BackendMode::kBuiltin;
  /// builtin: implementation name; cmd: template; http: URL.
  std::string target;
  /// builtin:scripted table path.
  std::filesystem::path table_path;
  /// OA step used to snap omegas for scripted lookups.
  double grid_step = 0.1;
  int max_workers = 4;
  double timeout_seconds = 600.0;

  /// Parses a descriptor string; `id` defaults to the string itself.
  static BackendDescriptor parse(BackendKind kind, const std::string &spec,
                                 const std::string &id = "");
  void validate() const;
};

/// What an adapter may know about the utterance besides its audio.
struct UtteranceContext {
  std::string utt_id;
  /// OA coefficient the audio was blended with, when known.
  std::optional<double> omega;
  const ManifestRecord *record = nullptr;
};

class Enhancer {
 public:
  explicit Enhancer(BackendDescriptor d) : desc_(std::move(d)) {}
  virtual ~Enhancer() = default;
  virtual Waveform enhance(const Waveform &noisy, const UtteranceContext &ctx) const = 0;
  const BackendDescriptor &descriptor() const { return desc_; }

 protected:
  BackendDescriptor desc_;
};

class Recognizer {
 public:
  explicit Recognizer(BackendDescriptor d) : desc_(std::move(d)) {}
  virtual ~Recognizer() = default;
  virtual std::string transcribe(const Waveform &w, const UtteranceContext &ctx) const = 0;
  const BackendDescriptor &descriptor() const { return desc_; }

 protected:
  BackendDescriptor desc_;
};

class Scorer {
 public:
  explicit Scorer(BackendDescriptor d) : desc_(std::move(d)) {}
  virtual ~Scorer() = default;
  /// Result is validated to lie in [1, 5].
  virtual MosScore score(const Waveform &w, const UtteranceContext &ctx) const = 0;
  const BackendDescriptor &descriptor() const { return desc_; }

 protected:
  BackendDescriptor desc_;
};

std::unique_ptr<Enhancer> make_enhancer(const BackendDescriptor &d);
std::unique_ptr<Recognizer> make_recognizer(const BackendDescriptor &d);
std::unique_ptr<Scorer> make_scorer(const BackendDescriptor &d);

/// Toy enhancer: power spectral subtraction (512-point Hann frames, hop 128,
/// over-subtraction 2, spectral floor 0.02) with the noise spectrum averaged
/// over the first 100 ms. Output has the input's length and rate.
Waveform spectral_subtraction(const Waveform &noisy);

/// The synthetic, non-physical SNR-to-MOS map of builtin:synthetic-snr.
MosScore synthetic_mos_from_snr(double snr_db);

/// Parses "sig=<f> bak=<f>" and range-checks the result.
MosScore parse_scorer_output(const std::string &text);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_BACKENDS_H_
