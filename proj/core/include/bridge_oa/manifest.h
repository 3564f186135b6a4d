// bridge_oa/manifest.h

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

#ifndef BRIDGE_OA_MANIFEST_H_
#define BRIDGE_OA_MANIFEST_H_

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bridge_oa {

/// One utterance of a JSON-Lines manifest.
///
///   {"utt_id": "F01_22GC010A_BUS", "noisy_path": "...", "enhanced_path": "...",
///    "transcript": "...", "subset": "et_real", "clean_path": "...",
///    "snr_db": 5.0, "channel": 4}
///
/// Only utt_id, noisy_path and subset are required. Relative paths are
/// resolved against the manifest's directory when read.
struct ManifestRecord {
  std::string utt_id;
  std::filesystem::path noisy_path;
  std::optional<std::filesystem::path> enhanced_path;
  std::string transcript;
  /// {tr, dt, et} x {simu, real}, written "et_real" etc.
  std::string subset;
  std::optional<std::filesystem::path> clean_path;
  std::optional<double> snr_db;
  /// Channel to read from multichannel files.
  std::optional<int> channel;

  bool has_transcript() const;
};

bool is_valid_subset(const std::string &subset);

/// Throws IoError on malformed lines, InvalidArgument on duplicate ids or
/// invalid subsets.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path &path);
void write_manifest(const std::filesystem::path &path,
                    const std::vector<ManifestRecord> &records);

std::vector<ManifestRecord> filter_subsets(const std::vector<ManifestRecord> &records,
                                           const std::set<std::string> &subsets);

/// Throws listing the ids of records that lack a reference transcript.
void require_transcripts(const std::vector<ManifestRecord> &records);

struct ScanOptions {
  /// Files whose name contains this tag are taken (".CH5" selects the fifth
  /// microphone of isolated six-channel recordings).
  std::string channel_tag = ".CH5";
  /// Overrides subset inference from directory names.
  std::optional<std::string> subset;
  /// Parallel tree holding enhanced files with the same relative paths.
  std::optional<std::filesystem::path> enhanced_root;
};

/// Walks `audio_root` for WAV files and joins them with a Kaldi-style text
/// file ("<utt_id> <words...>" per line). The subset is inferred from
/// directory names such as "et05_bus_real" unless given explicitly.
std::vector<ManifestRecord> scan_corpus(const std::filesystem::path &audio_root,
                                        const std::filesystem::path &transcripts,
                                        const ScanOptions &opts = {});

}  // namespace bridge_oa

#endif  // BRIDGE_OA_MANIFEST_H_
