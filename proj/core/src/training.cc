// src/training.cc

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

#include "bridge_oa/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "bridge_oa/checkpoint.h"
#include "bridge_oa/error.h"
#include "bridge_oa/parallel.h"
#include "bridge_oa/supervision.h"

namespace bridge_oa {

namespace fs = std::filesystem;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kPq: return "pq";
    case Strategy::kRi: return "ri";
    case Strategy::kCombined: return "combined";
  }
  return "?";
}

Strategy parse_strategy(const std::string &name) {
  if (name == "pq") return Strategy::kPq;
  if (name == "ri") return Strategy::kRi;
  if (name == "combined") return Strategy::kCombined;
  throw InvalidArgument("unknown strategy '" + name + "' (expected pq, ri or combined)");
}

bool uses_pq(Strategy s) { return s != Strategy::kRi; }
bool uses_ri(Strategy s) { return s != Strategy::kPq; }

void TrainConfig::validate() const {
  if (!(lr_peak > 0.0) || !std::isfinite(lr_peak)) throw InvalidArgument("lr_peak must be > 0");
  if (warmup_steps < 0) throw InvalidArgument("warmup_steps must be >= 0");
  if (max_epochs <= 0) throw InvalidArgument("max_epochs must be > 0");
  if (!(clip_norm > 0.0)) throw InvalidArgument("clip_norm must be > 0");
  if (batch_size <= 0) throw InvalidArgument("batch_size must be > 0");
  if (workers <= 0) throw InvalidArgument("workers must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw InvalidArgument("adam_epsilon must be > 0");
  if (augment_policy.max_time_mask_frames < 0 || augment_policy.max_freq_mask_channels < 0 ||
      augment_policy.masks_per_axis < 0)
    throw InvalidArgument("augmentation widths must be >= 0");
  OaGrid grid(k);  // validates k
}

double lr_schedule(std::int64_t step, const TrainConfig &cfg) {
  if (step < 0) throw InvalidArgument("lr_schedule: negative step");
  if (step >= cfg.warmup_steps) return cfg.lr_peak;
  return cfg.lr_peak * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
}

double global_norm(const Parameters &grads) {
  double sq = 0.0;
  for (const auto &[name, t] : grads.entries())
    for (double g : t.data) sq += g * g;
  return std::sqrt(sq);
}

double clip_gradients(Parameters *grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("clip_gradients: max_norm must be > 0");
  for (const auto &[name, t] : grads->entries())
    for (double g : t.data)
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in " + name);
  const double norm = global_norm(*grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto &[name, t] : grads->entries())
      for (double &g : t.data) g *= scale;
  }
  return norm;
}

Adam::Adam(const Parameters &like, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(like.zeros_like()),
      v_(like.zeros_like()) {}

void Adam::step(Parameters *params, const Parameters &grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto &pe = params->entries();
  const auto &ge = grads.entries();
  auto &me = m_.entries();
  auto &ve = v_.entries();
  if (pe.size() != ge.size()) throw ShapeError("Adam: gradient layout mismatch");
  for (std::size_t i = 0; i < pe.size(); ++i) {
    auto &p = pe[i].second.data;
    const auto &g = ge[i].second.data;
    auto &m = me[i].second.data;
    auto &v = ve[i].second.data;
    if (p.size() != g.size()) throw ShapeError("Adam: gradient size mismatch for " + pe[i].first);
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      if (lr != 0.0) p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + epsilon_);
    }
  }
}

void check_targets(const std::vector<ManifestRecord> &records, Strategy strategy,
                   const std::map<std::string, PqTarget> &pq,
                   const std::map<std::string, WerVector> &wers) {
  std::vector<std::string> missing;
  for (const ManifestRecord &rec : records) {
    const bool no_pq = uses_pq(strategy) && !pq.count(rec.utt_id);
    const bool no_ri = uses_ri(strategy) && !wers.count(rec.utt_id);
    if (no_pq || no_ri) missing.push_back(rec.utt_id);
  }
  if (missing.empty()) return;
  std::ostringstream msg;
  msg << missing.size() << " utterance(s) lack "
      << (strategy == Strategy::kPq   ? "perceptual targets"
          : strategy == Strategy::kRi ? "WER vectors"
                                      : "perceptual targets or WER vectors")
      << " (run prepare-pq-targets / sweep-wer first):";
  for (const auto &id : missing) msg << ' ' << id;
  throw InvalidArgument(msg.str());
}

std::vector<TrainingExample> prepare_examples(const std::vector<ManifestRecord> &records,
                                              Strategy strategy, const Enhancer &enhancer,
                                              const FbankConfig &fbank_cfg,
                                              const std::map<std::string, PqTarget> &pq,
                                              const std::map<std::string, WerVector> &wers,
                                              int workers) {
  check_targets(records, strategy, pq, wers);
  std::vector<TrainingExample> out(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const ManifestRecord &rec = records[i];
    auto [x, y] = noisy_and_enhanced(rec, enhancer);
    TrainingExample &ex = out[i];
    ex.utt_id = rec.utt_id;
    ex.noisy = fbank(x, fbank_cfg);
    ex.enhanced = fbank(y, fbank_cfg);
    if (auto it = pq.find(rec.utt_id); it != pq.end()) ex.pq_target = it->second.target;
    if (auto it = wers.find(rec.utt_id); it != wers.end()) ex.wers = it->second.values;
  });
  return out;
}

LossBreakdown example_loss(const ForwardOutput &out, const TrainingExample &ex,
                           Strategy strategy, Eigen::VectorXd *d_logits, double *d_omega) {
  LossBreakdown lb;
  lb.count = 1;
  const bool need_pq = uses_pq(strategy), need_ri = uses_ri(strategy);
  if (need_pq && !ex.pq_target)
    throw InvalidArgument(ex.utt_id + ": no perceptual target");
  if (need_ri && !ex.wers) throw InvalidArgument(ex.utt_id + ": no WER vector");
  // Each active term has weight 1 alone and 1/2 in the combined loss.
  const double weight = strategy == Strategy::kCombined ? 0.5 : 1.0;

  if (ex.pq_target) lb.pq = loss_pq(out.omega_hat, *ex.pq_target);
  if (d_omega) *d_omega = need_pq ? weight * 2.0 * (out.omega_hat - *ex.pq_target) : 0.0;

  if (ex.wers) {
    const std::vector<double> logits(out.logits.data(), out.logits.data() + out.logits.size());
    Eigen::VectorXd g;
    lb.ri = loss_ri(logits, *ex.wers, need_ri && d_logits ? &g : nullptr);
    if (d_logits && need_ri) *d_logits = weight * g;
  }
  if (d_logits && !need_ri) *d_logits = Eigen::VectorXd::Zero(out.logits.size());

  switch (strategy) {
    case Strategy::kPq: lb.total = lb.pq; break;
    case Strategy::kRi: lb.total = lb.ri; break;
    case Strategy::kCombined: lb.total = loss_combined(lb.pq, lb.ri); break;
  }
  return lb;
}

LossBreakdown evaluate_loss(const std::vector<TrainingExample> &examples,
                            const Parameters &params, const ModelConfig &model_cfg,
                            Strategy strategy, int workers) {
  std::vector<LossBreakdown> per(examples.size());
  std::vector<char> has_pq(examples.size()), has_ri(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    const TrainingExample &ex = examples[i];
    ForwardOutput out = forward(ex.noisy, ex.enhanced, params, model_cfg);
    per[i] = example_loss(out, ex, strategy);
    has_pq[i] = ex.pq_target.has_value();
    has_ri[i] = ex.wers.has_value();
  });
  LossBreakdown sum;
  std::size_t n_pq = 0, n_ri = 0;
  for (std::size_t i = 0; i < per.size(); ++i) {
    sum.total += per[i].total;
    if (has_pq[i]) sum.pq += per[i].pq, ++n_pq;
    if (has_ri[i]) sum.ri += per[i].ri, ++n_ri;
  }
  sum.count = per.size();
  if (sum.count) sum.total /= static_cast<double>(sum.count);
  if (n_pq) sum.pq /= static_cast<double>(n_pq);
  if (n_ri) sum.ri /= static_cast<double>(n_ri);
  return sum;
}

LossBreakdown batch_gradient(const std::vector<const TrainingExample *> &batch,
                             const Parameters &params, const ModelConfig &model_cfg,
                             Strategy strategy, Parameters *grads, int workers) {
  if (batch.empty()) throw InvalidArgument("batch_gradient: empty batch");
  std::vector<Parameters> per_grads(batch.size());
  std::vector<LossBreakdown> per_loss(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    const TrainingExample &ex = *batch[i];
    ForwardCache cache;
    ForwardOutput out = forward(ex.noisy, ex.enhanced, params, model_cfg, &cache);
    Eigen::VectorXd d_logits;
    double d_omega = 0.0;
    per_loss[i] = example_loss(out, ex, strategy, &d_logits, &d_omega);
    per_grads[i] = params.zeros_like();
    backward(cache, params, model_cfg, d_logits, d_omega, &per_grads[i]);
  });
  *grads = params.zeros_like();
  LossBreakdown sum;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    grads->add_scaled(per_grads[i], inv);
    sum.total += per_loss[i].total * inv;
    sum.pq += per_loss[i].pq * inv;
    sum.ri += per_loss[i].ri * inv;
  }
  sum.count = batch.size();
  return sum;
}

double select_omega(const ForwardOutput &out, Strategy strategy, const OaGrid &grid) {
  if (strategy != Strategy::kRi) return std::clamp(out.omega_hat, 0.0, 1.0);
  if (static_cast<std::size_t>(out.logits.size()) != grid.size())
    throw ShapeError("select_omega: " + std::to_string(out.logits.size()) +
                     " logits for a grid of " + std::to_string(grid.size()));
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < out.logits.size(); ++i)
    if (out.logits[i] < out.logits[best]) best = i;
  return grid.descending_at(static_cast<std::size_t>(best));
}

std::string to_json_line(const MetricsRow &row) {
  nlohmann::ordered_json j;
  j["step"] = row.step;
  j["epoch"] = row.epoch;
  j["lr"] = row.lr;
  j["loss"] = row.loss;
  j["val_loss"] = row.val_loss ? nlohmann::ordered_json(*row.val_loss) : nullptr;
  return j.dump();
}

namespace {

// SplitMix64 finaliser; derives independent augmentation seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

TrainResult train(const std::vector<TrainingExample> &train_set,
                  const std::vector<TrainingExample> &val_set, const ModelConfig &model_cfg,
                  const TrainConfig &cfg, const TrainOptions &options) {
  cfg.validate();
  model_cfg.validate();
  if (train_set.empty()) throw InvalidArgument("train: empty training set");
  if (uses_ri(cfg.strategy) &&
      static_cast<std::size_t>(model_cfg.logits_dim) != OaGrid(cfg.k).size())
    throw ShapeError("logits_dim does not match the OA grid size");
  for (const auto *set : {&train_set, &val_set})
    for (const TrainingExample &ex : *set) {
      if ((uses_pq(cfg.strategy) && !ex.pq_target) || (uses_ri(cfg.strategy) && !ex.wers))
        throw InvalidArgument(ex.utt_id + ": missing target for strategy " +
                              to_string(cfg.strategy));
    }

  TrainResult result;
  TrainState &st = result.state;
  st.params = init_params(model_cfg, cfg.seed);
  st.best_params = st.params;
  Adam adam(st.params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);

  std::ofstream metrics_os;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    metrics_os.open(options.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics_os) throw IoError("cannot write " + (options.out_dir / "metrics.jsonl").string());
  }
  auto log_row = [&](const MetricsRow &row) {
    result.metrics.push_back(row);
    if (metrics_os.is_open()) metrics_os << to_json_line(row) << '\n' << std::flush;
  };
  auto meta_for = [&](int epoch, double val) {
    std::map<std::string, std::string> meta = options.checkpoint_meta;
    meta["strategy"] = to_string(cfg.strategy);
    meta["oa_step"] = nlohmann::json(cfg.k).dump();
    meta["epoch"] = std::to_string(epoch);
    meta["val_loss"] = nlohmann::json(val).dump();
    return meta;
  };

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Parameters grads = st.params.zeros_like();
  bool stop = false;

  for (int epoch = 1; epoch <= cfg.max_epochs && !stop; ++epoch) {
    st.epoch = epoch;
    std::mt19937_64 shuffle_rng(mix(cfg.seed ^ mix(static_cast<std::uint64_t>(epoch))));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<TrainingExample> augmented;
      std::vector<const TrainingExample *> batch;
      if (cfg.augment) {
        augmented.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          const TrainingExample &ex = train_set[order[i]];
          const std::uint64_t seed =
              mix(cfg.seed ^ mix(static_cast<std::uint64_t>(st.step) * 1000003ULL + i));
          TrainingExample aug = ex;
          // Both streams derive from the utterance seed but draw their own masks.
          aug.noisy = spec_augment(ex.noisy, cfg.augment_policy, mix(seed ^ 1));
          aug.enhanced = spec_augment(ex.enhanced, cfg.augment_policy, mix(seed ^ 2));
          augmented.push_back(std::move(aug));
        }
        for (const auto &ex : augmented) batch.push_back(&ex);
      } else {
        for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      }

      LossBreakdown lb =
          batch_gradient(batch, st.params, model_cfg, cfg.strategy, &grads, cfg.workers);
      if (!std::isfinite(lb.total)) {
        std::string ids;
        for (const auto *ex : batch) ids += " " + ex->utt_id;
        throw NonFiniteError("non-finite loss at step " + std::to_string(st.step) +
                             "; batch:" + ids);
      }
      double norm = 0.0;
      try {
        norm = clip_gradients(&grads, cfg.clip_norm);
      } catch (const NonFiniteError &e) {
        std::string ids;
        for (const auto *ex : batch) ids += " " + ex->utt_id;
        spdlog::warn("step {} skipped ({}); batch:{}", st.step, e.what(), ids);
        ++result.skipped_steps;
        continue;
      }
      const double lr = lr_schedule(st.step + 1, cfg);
      adam.step(&st.params, grads, lr);
      ++st.step;
      epoch_loss += lb.total;
      ++epoch_batches;
      if (options.on_step)
        options.on_step({st.step, epoch, lr, lb.total, norm, global_norm(grads)});
      log_row({st.step, epoch, lr, lb.total, std::nullopt});
      if (options.max_steps > 0 && st.step >= options.max_steps) {
        stop = true;
        break;
      }
    }

    const double train_mean = epoch_batches ? epoch_loss / epoch_batches : 0.0;
    const double val = val_set.empty()
                           ? train_mean
                           : evaluate_loss(val_set, st.params, model_cfg, cfg.strategy,
                                           cfg.workers)
                                 .total;
    if (!std::isfinite(val)) throw NonFiniteError("non-finite validation loss");
    log_row({st.step, epoch, lr_schedule(st.step, cfg), train_mean, val});
    spdlog::info("epoch {} step {} train {:.6f} val {:.6f}", epoch, st.step, train_mean, val);
    if (val < st.best_val_loss) {
      st.best_val_loss = val;
      st.best_epoch = epoch;
      st.best_params = st.params;
      if (!options.out_dir.empty())
        save_checkpoint(options.out_dir / "best.ckpt", st.params, model_cfg,
                        meta_for(epoch, val));
    }
    if (!options.out_dir.empty())
      save_checkpoint(options.out_dir / "last.ckpt", st.params, model_cfg,
                      meta_for(epoch, val));
  }
  return result;
}

}  // namespace bridge_oa
