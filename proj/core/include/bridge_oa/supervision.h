// bridge_oa/supervision.h

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

#ifndef BRIDGE_OA_SUPERVISION_H_
#define BRIDGE_OA_SUPERVISION_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bridge_oa {

/// Non-intrusive quality scores, each on the 1..5 MOS scale.
struct MosScore {
  double sig = 3.0;  // speech quality
  double bak = 3.0;  // background quality

  void validate() const;
};

/// (alpha - 1) / 4; throws unless 1 <= alpha <= 5.
double norm_mos(double alpha);

/// Perceptual-quality regression target (norm(sig) + norm(bak)) / 2.
double pq_target(const MosScore &m);

/// Squared error of one utterance.
double loss_pq(double omega_hat, double target);
/// Mean of per-utterance squared errors.
double loss_pq(std::span<const double> omega_hat, std::span<const double> target);

/// Recognition-information loss -log sigmoid(cos(sigmoid(logits), sigmoid(wers))).
/// Both vectors share the descending-OA ordering (index 0 is omega = 1).
/// If `d_logits` is non-null it receives dL/dlogits.
double loss_ri(std::span<const double> logits, std::span<const double> wers,
               Eigen::VectorXd *d_logits = nullptr);

/// Lower and upper (exclusive) bounds of loss_ri: -ln sigmoid(1), -ln sigmoid(0).
double loss_ri_lower_bound();
double loss_ri_upper_bound();

/// (lpq + lri) / 2.
double loss_combined(double lpq, double lri);

/// Lowercased, punctuation-stripped word sequence.
struct Transcript {
  std::vector<std::string> words;

  bool empty() const { return words.empty(); }
  std::size_t size() const { return words.size(); }
  bool operator==(const Transcript &) const = default;
};

/// Lowercases, keeps letters, digits and intra-word apostrophes, splits on
/// everything else.
Transcript normalize_text(std::string_view raw);

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t ref_words = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
};

/// Unit-cost Levenshtein alignment of two word sequences.
EditCounts edit_distance(const Transcript &ref, const Transcript &hyp);

/// errors / |ref|; not clipped (may exceed 1). Throws on empty reference.
double wer(const Transcript &ref, const Transcript &hyp);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_SUPERVISION_H_
