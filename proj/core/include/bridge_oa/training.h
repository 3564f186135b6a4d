// bridge_oa/training.h

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

#ifndef BRIDGE_OA_TRAINING_H_
#define BRIDGE_OA_TRAINING_H_

// Optimisation of the bridging network.
//
// Utterances of a batch are run through forward/backward one at a time and
// their gradients averaged, which is what padding with an exact mask would
// give. The per-utterance work may run on several threads; gradients are
// summed in batch order, so results do not depend on the thread count.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
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

namespace bridge_oa {

enum class Strategy { kPq, kRi, kCombined };

std::string to_string(Strategy s);
/// Accepts "pq", "ri" and "combined".
Strategy parse_strategy(const std::string &name);
bool uses_pq(Strategy s);
bool uses_ri(Strategy s);

struct TrainConfig {
  Strategy strategy = Strategy::kCombined;
  double lr_peak = 0.0005;
  std::int64_t warmup_steps = 1000;
  int max_epochs = 45;
  double clip_norm = 10.0;
  int batch_size = 16;
  std::uint64_t seed = 0;
  /// OA grid step.
  double k = 0.1;
  bool augment = true;
  AugmentPolicy augment_policy;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int workers = 1;

  void validate() const;
};

/// Linear ramp from 0 at step 0 to lr_peak at warmup_steps, constant after.
double lr_schedule(std::int64_t step, const TrainConfig &cfg);

double global_norm(const Parameters &grads);

/// Scales `grads` in place so that their global L2 norm is at most max_norm
/// and returns the norm before clipping. Throws NonFiniteError if any
/// gradient is NaN or infinite (grads are then left untouched).
double clip_gradients(Parameters *grads, double max_norm);

class Adam {
 public:
  Adam(const Parameters &like, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  /// One update. With lr == 0 the parameters are left bitwise unchanged.
  void step(Parameters *params, const Parameters &grads, double lr);
  std::int64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  Parameters m_, v_;
};

struct TrainingExample {
  std::string utt_id;
  FeatureMatrix noisy;
  FeatureMatrix enhanced;
  std::optional<double> pq_target;
  /// Descending OA order.
  std::optional<std::vector<double>> wers;
};

/// Throws InvalidArgument naming every record that lacks a target required
/// by `strategy`.
void check_targets(const std::vector<ManifestRecord> &records, Strategy strategy,
                   const std::map<std::string, PqTarget> &pq,
                   const std::map<std::string, WerVector> &wers);

/// Loads audio, enhances, extracts fbanks and attaches targets. Calls
/// check_targets first.
std::vector<TrainingExample> prepare_examples(const std::vector<ManifestRecord> &records,
                                              Strategy strategy, const Enhancer &enhancer,
                                              const FbankConfig &fbank_cfg,
                                              const std::map<std::string, PqTarget> &pq,
                                              const std::map<std::string, WerVector> &wers,
                                              int workers = 1);

struct LossBreakdown {
  /// The strategy loss: L_PQ, L_RI or their mean.
  double total = 0.0;
  double pq = 0.0;
  double ri = 0.0;
  std::size_t count = 0;
};

/// Loss of one output under `strategy`. When d_logits / d_omega are given
/// they receive the derivatives of `total`.
LossBreakdown example_loss(const ForwardOutput &out, const TrainingExample &ex,
                           Strategy strategy, Eigen::VectorXd *d_logits = nullptr,
                           double *d_omega = nullptr);

/// Mean losses over `examples`, no augmentation. Components that the
/// examples carry targets for are filled even if `strategy` does not use
/// them.
LossBreakdown evaluate_loss(const std::vector<TrainingExample> &examples,
                            const Parameters &params, const ModelConfig &model_cfg,
                            Strategy strategy, int workers = 1);

/// Mean loss and parameter gradient over a batch.
LossBreakdown batch_gradient(const std::vector<const TrainingExample *> &batch,
                             const Parameters &params, const ModelConfig &model_cfg,
                             Strategy strategy, Parameters *grads, int workers = 1);

/// Inference-time coefficient: omega_hat for pq and combined; for ri the grid
/// point (descending order) at the smallest logit, ties to the larger omega.
double select_omega(const ForwardOutput &out, Strategy strategy, const OaGrid &grid);

struct MetricsRow {
  std::int64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_loss;
};

std::string to_json_line(const MetricsRow &row);

struct StepInfo {
  std::int64_t step;
  int epoch;
  double lr;
  double loss;
  double grad_norm;
  double clipped_norm;
};

struct TrainState {
  std::int64_t step = 0;
  int epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  Parameters params;
  Parameters best_params;
};

struct TrainOptions {
  /// When set: metrics.jsonl, best.ckpt and last.ckpt are written here.
  std::filesystem::path out_dir;
  /// Stop after this many optimizer steps (0 = no limit).
  std::int64_t max_steps = 0;
  std::function<void(const StepInfo &)> on_step;
  std::map<std::string, std::string> checkpoint_meta;
};

struct TrainResult {
  TrainState state;
  std::vector<MetricsRow> metrics;
  std::size_t skipped_steps = 0;
};

/// Trains from init_params(model_cfg, cfg.seed). Batches are reshuffled each
/// epoch from the seed; validation runs after every epoch and the best
/// validation loss selects best_params. With an empty validation set the
/// training loss of the epoch is used instead.
TrainResult train(const std::vector<TrainingExample> &train_set,
                  const std::vector<TrainingExample> &val_set, const ModelConfig &model_cfg,
                  const TrainConfig &cfg, const TrainOptions &options = {});

}  // namespace bridge_oa

#endif  // BRIDGE_OA_TRAINING_H_
