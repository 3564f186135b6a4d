// tools/bridge-oa.cc

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

// Command line front end.
//
// Every option can also be given in a TOML file passed with --config; keys
// are the long option names without the leading dashes, e.g.
//
//   oa-step = 0.1
//   enhancer = "precomputed"
//   [train]
//   strategy = "combined"
//   max-epochs = 45
//
// Command-line flags override the file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bridge_oa/audio.h"
#include "bridge_oa/backends.h"
#include "bridge_oa/checkpoint.h"
#include "bridge_oa/error.h"
#include "bridge_oa/features.h"
#include "bridge_oa/manifest.h"
#include "bridge_oa/nnet.h"
#include "bridge_oa/parallel.h"
#include "bridge_oa/pipeline.h"
#include "bridge_oa/synthetic.h"
#include "bridge_oa/target_cache.h"
#include "bridge_oa/training.h"

namespace fs = std::filesystem;
using namespace bridge_oa;

namespace {

struct GlobalOptions {
  std::string cache_dir;
  int workers = 1;
  std::string log_level = "info";
  double k = 0.1;

  std::string enhancer = "precomputed", enhancer_id;
  std::string recognizer = "builtin:oracle", recognizer_id;
  std::string scorer = "builtin:synthetic-snr", scorer_id;
  int backend_max_workers = 4;
  double backend_timeout = 600.0;

  FbankConfig fbank;

  fs::path cache_root() const {
    return cache_dir.empty() ? default_cache_root() : fs::path(cache_dir);
  }
  BackendDescriptor descriptor(BackendKind kind) const {
    const std::string &spec = kind == BackendKind::kEnhancer     ? enhancer
                              : kind == BackendKind::kRecognizer ? recognizer
                                                                 : scorer;
    const std::string &id = kind == BackendKind::kEnhancer     ? enhancer_id
                            : kind == BackendKind::kRecognizer ? recognizer_id
                                                               : scorer_id;
    BackendDescriptor d = BackendDescriptor::parse(kind, spec, id);
    d.grid_step = k;
    d.max_workers = backend_max_workers;
    d.timeout_seconds = backend_timeout;
    d.validate();
    return d;
  }
};

struct ManifestOptions {
  std::string path;
  std::vector<std::string> subsets;

  std::vector<ManifestRecord> load() const {
    auto records = read_manifest(path);
    if (!subsets.empty()) records = filter_subsets(records, {subsets.begin(), subsets.end()});
    if (records.empty()) throw InvalidArgument("no utterances selected from " + path);
    return records;
  }
};

void add_manifest_options(CLI::App *cmd, ManifestOptions *m, const std::string &name = "manifest") {
  cmd->add_option("--" + name, m->path, "JSON-Lines manifest")->required();
  cmd->add_option("--subsets", m->subsets, "Keep only these subsets (e.g. et_real et_simu)");
}

void write_text(const std::string &path, const std::string &text) {
  if (path.empty()) return;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << text;
  if (text.empty() || text.back() != '\n') os << '\n';
}

void add_fbank_options(CLI::App *app, FbankConfig *f) {
  auto *g = app->add_option_group("features", "Log-mel filterbank");
  g->add_option("--n-mels", f->n_mels, "Mel bands")->capture_default_str();
  g->add_option("--window-ms", f->window_ms, "Window length (ms)")->capture_default_str();
  g->add_option("--hop-ms", f->hop_ms, "Hop (ms)")->capture_default_str();
  g->add_option("--fft-size", f->fft_size, "FFT size")->capture_default_str();
  g->add_option("--mel-low-hz", f->mel_low_hz, "Lowest filter edge")->capture_default_str();
  g->add_option("--mel-high-hz", f->mel_high_hz, "Highest filter edge (0 = Nyquist)")
      ->capture_default_str();
  g->add_option("--energy-floor", f->energy_floor, "Floor before the log")->capture_default_str();
  g->add_flag("--pre-emphasis,!--no-pre-emphasis", f->pre_emphasis, "Pre-emphasis filter");
  g->add_option("--pre-emphasis-coeff", f->pre_emphasis_coeff, "Pre-emphasis coefficient")
      ->capture_default_str();
  g->add_flag("--mean-normalize,!--no-mean-normalize", f->mean_normalize,
              "Per-utterance mean normalisation");
}

void add_model_options(CLI::App *cmd, ModelConfig *m) {
  auto *g = cmd->add_option_group("model", "Bridging network");
  g->add_option("--conv-channels", m->conv_channels, "Channels C (256 or 384)")
      ->capture_default_str();
  g->add_option("--bottleneck-dim", m->bottleneck_dim, "SE bottleneck")->capture_default_str();
  g->add_option("--res2-scale", m->res2_scale, "Res2 scale s")->capture_default_str();
  g->add_option("--fc-nodes", m->fc_nodes, "Fully connected width")->capture_default_str();
  g->add_option("--frame-kernel", m->frame_kernel, "Frame conv kernel")->capture_default_str();
  g->add_option("--res2-kernel", m->res2_kernel, "Res2 group conv kernel")->capture_default_str();
  g->add_option("--res2-dilation", m->res2_dilation, "Res2 dilation")->capture_default_str();
  g->add_option("--num-blocks", m->num_blocks, "Res2 blocks")->capture_default_str();
  g->add_flag("--custom-width", m->custom_width, "Allow widths other than 256/384");
}

struct TrainCli {
  ManifestOptions train, valid;
  std::string out_dir = "bridge_oa_run";
  std::string strategy = "combined";
  TrainConfig cfg;
  ModelConfig model;
  std::int64_t max_steps = 0;
};

void add_train_options(CLI::App *cmd, TrainCli *t) {
  add_manifest_options(cmd, &t->train);
  cmd->add_option("--valid-manifest", t->valid.path, "Held-out manifest for validation");
  cmd->add_option("--valid-subsets", t->valid.subsets, "Subset filter for the held-out manifest");
  cmd->add_option("--out-dir", t->out_dir, "Checkpoints and metrics.jsonl")->capture_default_str();
  cmd->add_option("--strategy", t->strategy, "pq, ri or combined")
      ->check(CLI::IsMember({"pq", "ri", "combined"}))
      ->capture_default_str();
  cmd->add_option("--lr-peak", t->cfg.lr_peak, "Peak learning rate")->capture_default_str();
  cmd->add_option("--warmup-steps", t->cfg.warmup_steps, "Linear warmup steps")
      ->capture_default_str();
  cmd->add_option("--max-epochs", t->cfg.max_epochs, "Epoch cap")->capture_default_str();
  cmd->add_option("--max-steps", t->max_steps, "Step cap (0 = none)")->capture_default_str();
  cmd->add_option("--clip-norm", t->cfg.clip_norm, "Global gradient norm cap")
      ->capture_default_str();
  cmd->add_option("--batch-size", t->cfg.batch_size, "Utterances per step")->capture_default_str();
  cmd->add_option("--seed", t->cfg.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--augment,!--no-augment", t->cfg.augment, "SpecAugment during training");
  cmd->add_option("--time-mask-max", t->cfg.augment_policy.max_time_mask_frames,
                  "Widest time mask (frames)")
      ->capture_default_str();
  cmd->add_option("--freq-mask-max", t->cfg.augment_policy.max_freq_mask_channels,
                  "Widest frequency mask (bands)")
      ->capture_default_str();
  cmd->add_option("--masks-per-axis", t->cfg.augment_policy.masks_per_axis, "Masks per axis")
      ->capture_default_str();
  cmd->add_option("--adam-beta1", t->cfg.adam_beta1)->capture_default_str();
  cmd->add_option("--adam-beta2", t->cfg.adam_beta2)->capture_default_str();
  cmd->add_option("--adam-epsilon", t->cfg.adam_epsilon)->capture_default_str();
  add_model_options(cmd, &t->model);
}

// Reads every cached target that the given records need.
std::map<std::string, PqTarget> cached_pq(const GlobalOptions &g,
                                          const std::vector<ManifestRecord> &records) {
  PqTargetCache cache(g.cache_root(), g.descriptor(BackendKind::kScorer).id);
  std::map<std::string, PqTarget> out;
  for (const auto &r : records)
    if (auto t = cache.get(r.utt_id)) out[r.utt_id] = *t;
  return out;
}

std::map<std::string, WerVector> cached_wers(const GlobalOptions &g,
                                             const std::vector<ManifestRecord> &records) {
  WerVectorCache cache(g.cache_root(), OaGrid(g.k), g.descriptor(BackendKind::kEnhancer).id,
                       g.descriptor(BackendKind::kRecognizer).id);
  std::map<std::string, WerVector> out;
  for (const auto &r : records)
    if (auto v = cache.get(r.utt_id)) out[r.utt_id] = *v;
  return out;
}

int run_train(const GlobalOptions &g, TrainCli &t) {
  TrainConfig cfg = t.cfg;
  cfg.strategy = parse_strategy(t.strategy);
  cfg.k = g.k;
  cfg.workers = g.workers;
  ModelConfig model = t.model;
  model.n_mels = g.fbank.n_mels;
  model.logits_dim = static_cast<int>(OaGrid(g.k).size());
  model.validate();
  cfg.validate();

  auto train_records = t.train.load();
  std::vector<ManifestRecord> valid_records;
  if (!t.valid.path.empty()) valid_records = t.valid.load();
  std::vector<ManifestRecord> all = train_records;
  all.insert(all.end(), valid_records.begin(), valid_records.end());

  std::map<std::string, PqTarget> pq;
  std::map<std::string, WerVector> wers;
  if (uses_pq(cfg.strategy)) pq = cached_pq(g, all);
  if (uses_ri(cfg.strategy)) wers = cached_wers(g, all);
  check_targets(all, cfg.strategy, pq, wers);

  auto enhancer = make_enhancer(g.descriptor(BackendKind::kEnhancer));
  spdlog::info("extracting features for {} + {} utterances", train_records.size(),
               valid_records.size());
  auto train_set =
      prepare_examples(train_records, cfg.strategy, *enhancer, g.fbank, pq, wers, g.workers);
  auto valid_set =
      prepare_examples(valid_records, cfg.strategy, *enhancer, g.fbank, pq, wers, g.workers);

  TrainOptions opts;
  opts.out_dir = t.out_dir;
  opts.max_steps = t.max_steps;
  opts.checkpoint_meta = {{"fbank", g.fbank.fingerprint()},
                          {"enhancer", enhancer->descriptor().id},
                          {"recognizer", g.descriptor(BackendKind::kRecognizer).id},
                          {"scorer", g.descriptor(BackendKind::kScorer).id}};
  TrainResult r = train(train_set, valid_set, model, cfg, opts);
  std::cout << "best epoch " << r.state.best_epoch << ", validation loss "
            << r.state.best_val_loss << ", steps " << r.state.step;
  if (r.skipped_steps) std::cout << ", skipped " << r.skipped_steps;
  std::cout << "\ncheckpoint: " << (fs::path(t.out_dir) / "best.ckpt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Observation-addition bridge between a speech enhancer and a recognizer"};
  app.set_config("--config", "", "TOML configuration file");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--cache-dir", g.cache_dir,
                 "Target cache root (default: $BRIDGE_OA_CACHE_DIR or ./.bridge_oa_cache)");
  app.add_option("--workers", g.workers, "Parallel utterance workers")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error")
      ->capture_default_str();
  app.add_option("--oa-step", g.k, "OA grid step k")->capture_default_str();
  auto *b = app.add_option_group("backends", "Enhancer, recognizer and scorer adapters");
  b->add_option("--enhancer", g.enhancer, "precomputed | builtin:... | cmd:... | http://...")
      ->capture_default_str();
  b->add_option("--enhancer-id", g.enhancer_id, "Cache identity (default: the descriptor string)");
  b->add_option("--recognizer", g.recognizer, "builtin:oracle | builtin:scripted=<tsv> | ...")
      ->capture_default_str();
  b->add_option("--recognizer-id", g.recognizer_id, "Cache identity");
  b->add_option("--scorer", g.scorer, "builtin:synthetic-snr | cmd:... | http://...")
      ->capture_default_str();
  b->add_option("--scorer-id", g.scorer_id, "Cache identity");
  b->add_option("--backend-max-workers", g.backend_max_workers,
                "Concurrent calls per external backend")
      ->capture_default_str();
  b->add_option("--backend-timeout", g.backend_timeout, "Seconds per external call")
      ->capture_default_str();
  add_fbank_options(&app, &g.fbank);

  // prepare-manifest
  auto *prep = app.add_subcommand("prepare-manifest", "Build a JSON-Lines manifest");
  std::string out_manifest = "manifest.jsonl", audio_root, transcripts, subset, enhanced_root;
  std::string channel_tag = ".CH5";
  int synthetic = 0;
  SyntheticConfig syn;
  std::string synthetic_dir = "synthetic", scripted_table;
  prep->add_option("--out", out_manifest, "Manifest to write")->capture_default_str();
  prep->add_option("--audio-root", audio_root, "Corpus audio tree");
  prep->add_option("--transcripts", transcripts, "Kaldi-style text file");
  prep->add_option("--channel-tag", channel_tag, "File name tag selecting the channel")
      ->capture_default_str();
  prep->add_option("--subset", subset, "Force the subset of every record");
  prep->add_option("--enhanced-root", enhanced_root, "Tree of precomputed enhanced audio");
  prep->add_option("--synthetic", synthetic, "Generate N synthetic utterances instead");
  prep->add_option("--synthetic-dir", synthetic_dir, "Where synthetic audio goes")
      ->capture_default_str();
  prep->add_option("--snr-min", syn.min_snr_db)->capture_default_str();
  prep->add_option("--snr-max", syn.max_snr_db)->capture_default_str();
  prep->add_option("--synthetic-seed", syn.seed)->capture_default_str();
  prep->add_option("--scripted-table", scripted_table,
                   "Also write a scripted recognizer table for the synthetic corpus");

  // prepare-pq-targets
  auto *pqc = app.add_subcommand("prepare-pq-targets", "Score noisy audio into PQ targets");
  ManifestOptions pq_manifest;
  add_manifest_options(pqc, &pq_manifest);

  // sweep-wer
  auto *sw = app.add_subcommand("sweep-wer", "WER at every OA coefficient; fills the WER cache");
  ManifestOptions sw_manifest;
  std::string sw_json, sw_table;
  add_manifest_options(sw, &sw_manifest);
  sw->add_option("--out-json", sw_json, "JSON report");
  sw->add_option("--out-table", sw_table, "Plain-text report");

  // train
  auto *tr = app.add_subcommand("train", "Train the bridging network");
  TrainCli tcli;
  add_train_options(tr, &tcli);

  // infer / evaluate / histogram share a model source.
  std::string checkpoint, strategy_override;
  std::optional<double> fixed_omega;
  auto add_model_source = [&](CLI::App *cmd, bool allow_fixed) {
    auto *c = cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint");
    cmd->add_option("--strategy", strategy_override,
                    "Coefficient policy (default: the training strategy)")
        ->check(CLI::IsMember({"pq", "ri", "combined"}));
    if (allow_fixed) {
      auto *f = cmd->add_option("--fixed-omega", fixed_omega,
                                "Blend with this coefficient instead of a model")
                    ->check(CLI::Range(0.0, 1.0));
      c->excludes(f);
    } else {
      c->required();
    }
  };

  auto *inf = app.add_subcommand("infer", "Enhance, bridge, blend and recognise");
  ManifestOptions inf_manifest;
  std::vector<std::string> inf_utts;
  std::string inf_out_dir, inf_json;
  add_manifest_options(inf, &inf_manifest);
  add_model_source(inf, true);
  inf->add_option("--utt", inf_utts, "Only these utterance ids");
  inf->add_option("--out-dir", inf_out_dir, "Write blended WAVs here");
  inf->add_option("--out-json", inf_json, "JSON-Lines results");

  auto *ev = app.add_subcommand("evaluate", "Pooled WER per subset and overall");
  ManifestOptions ev_manifest;
  std::string ev_json, ev_table;
  bool per_utt = false;
  add_manifest_options(ev, &ev_manifest);
  add_model_source(ev, true);
  ev->add_option("--out-json", ev_json, "JSON report");
  ev->add_option("--out-table", ev_table, "Plain-text report");
  ev->add_flag("--per-utterance", per_utt, "Include per-utterance rows in the text table");

  auto *hi = app.add_subcommand("histogram", "Distribution of chosen OA coefficients");
  ManifestOptions hi_manifest;
  int bins = 10;
  std::string hi_json;
  add_manifest_options(hi, &hi_manifest);
  add_model_source(hi, false);
  hi->add_option("--bins", bins, "Uniform bins on [0, 1]")->capture_default_str();
  hi->add_option("--out-json", hi_json, "JSON counts");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("bridge-oa");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    g.fbank.validate(kDefaultSampleRate);
    const OaGrid grid(g.k);
    auto load_model = [&]() {
      std::optional<Strategy> s;
      if (!strategy_override.empty()) s = parse_strategy(strategy_override);
      return BridgeModel::load(checkpoint, s, g.fbank);
    };
    auto omega_source = [&](std::optional<BridgeModel> &holder) {
      if (fixed_omega) return OmegaSource::constant(*fixed_omega);
      if (checkpoint.empty()) throw InvalidArgument("give --checkpoint or --fixed-omega");
      holder = load_model();
      return OmegaSource::from(*holder);
    };

    if (*prep) {
      std::vector<ManifestRecord> records;
      if (synthetic > 0) {
        syn.num_utterances = synthetic;
        if (!subset.empty()) syn.subset = subset;
        auto enh = make_enhancer(BackendDescriptor::parse(BackendKind::kEnhancer,
                                                          "builtin:spectral-subtraction"));
        records = write_synthetic_corpus(make_synthetic_corpus(syn), synthetic_dir, enh.get(),
                                         syn.subset);
        if (!scripted_table.empty())
          write_scripted_asr_table(
              records, grid,
              [&](const ManifestRecord &r) { return synthetic_best_omega(*r.snr_db, grid); },
              scripted_table);
      } else {
        if (audio_root.empty() || transcripts.empty())
          throw InvalidArgument("prepare-manifest needs --audio-root and --transcripts "
                                "(or --synthetic N)");
        ScanOptions opts;
        opts.channel_tag = channel_tag;
        if (!subset.empty()) opts.subset = subset;
        if (!enhanced_root.empty()) opts.enhanced_root = fs::path(enhanced_root);
        records = scan_corpus(audio_root, transcripts, opts);
      }
      write_manifest(out_manifest, records);
      std::cout << "wrote " << records.size() << " records to " << out_manifest << "\n";
      return 0;
    }

    if (*pqc) {
      auto records = pq_manifest.load();
      auto scorer = make_scorer(g.descriptor(BackendKind::kScorer));
      PqTargetCache cache(g.cache_root(), scorer->descriptor().id);
      PqBuildResult r = build_pq_targets(records, *scorer, &cache,
                                         std::min(g.workers, g.backend_max_workers));
      std::cout << "perceptual targets: " << r.computed << " computed, " << r.reused
                << " reused, " << r.failures.size() << " failed\ncache: "
                << cache.path().string() << "\n";
      return r.failures.empty() ? 0 : 3;
    }

    if (*sw) {
      auto records = sw_manifest.load();
      auto enh = make_enhancer(g.descriptor(BackendKind::kEnhancer));
      auto asr = make_recognizer(g.descriptor(BackendKind::kRecognizer));
      WerVectorCache cache(g.cache_root(), grid, enh->descriptor().id, asr->descriptor().id);
      SweepReport r = sweep(records, grid, *enh, *asr, &cache, g.workers);
      const std::string table = format_table(r);
      std::cout << table;
      write_text(sw_table, table);
      write_text(sw_json, to_json(r));
      spdlog::info("WER vectors: {} computed, {} reused; cache {}", r.computed, r.reused,
                   cache.path().string());
      return r.failures.empty() ? 0 : 3;
    }

    if (*tr) return run_train(g, tcli);

    if (*inf) {
      auto records = inf_manifest.load();
      if (!inf_utts.empty()) {
        std::set<std::string> keep(inf_utts.begin(), inf_utts.end());
        std::erase_if(records, [&](const ManifestRecord &r) { return !keep.count(r.utt_id); });
        if (records.size() != keep.size())
          throw InvalidArgument("some --utt ids are not in the manifest");
      }
      std::optional<BridgeModel> holder;
      OmegaSource src = omega_source(holder);
      auto enh = make_enhancer(g.descriptor(BackendKind::kEnhancer));
      auto asr = make_recognizer(g.descriptor(BackendKind::kRecognizer));
      std::ofstream jl;
      if (!inf_json.empty()) jl.open(inf_json);
      if (!inf_out_dir.empty()) fs::create_directories(inf_out_dir);
      int failed = 0;
      for (const auto &rec : records) {
        try {
          InferenceResult r = infer_utterance(rec, src, *enh, *asr);
          std::cout << rec.utt_id << "\t" << r.omega << "\t" << r.hypothesis << "\n";
          nlohmann::ordered_json j = {
              {"utt_id", rec.utt_id}, {"omega", r.omega}, {"hypothesis", r.hypothesis}};
          if (!inf_out_dir.empty()) {
            fs::path wav = fs::path(inf_out_dir) / (rec.utt_id + ".wav");
            save_wav(r.blended, wav);
            j["blended_wav"] = wav.string();
          }
          if (jl.is_open()) jl << j.dump() << "\n";
        } catch (const BackendError &e) {
          spdlog::error("{}", e.what());
          ++failed;
        }
      }
      return failed ? 3 : 0;
    }

    if (*ev) {
      auto records = ev_manifest.load();
      std::optional<BridgeModel> holder;
      OmegaSource src = omega_source(holder);
      auto enh = make_enhancer(g.descriptor(BackendKind::kEnhancer));
      auto asr = make_recognizer(g.descriptor(BackendKind::kRecognizer));
      EvalReport r = evaluate(records, src, *enh, *asr, g.workers);
      const std::string table = format_table(r, per_utt);
      std::cout << table;
      write_text(ev_table, table);
      write_text(ev_json, to_json(r));
      for (const auto &f : r.failures) spdlog::warn("{}", f.message);
      return r.failures.empty() ? 0 : 3;
    }

    if (*hi) {
      auto records = hi_manifest.load();
      BridgeModel model = load_model();
      auto enh = make_enhancer(g.descriptor(BackendKind::kEnhancer));
      std::vector<double> omegas(records.size());
      std::vector<std::string> errors(records.size());
      std::vector<char> ok(records.size(), 0);
      parallel_for(records.size(), g.workers, [&](std::size_t i) {
        try {
          omegas[i] = infer_omega(records[i], model, *enh);
          ok[i] = 1;
        } catch (const Error &e) {
          errors[i] = e.what();
        }
      });
      std::vector<double> good;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (ok[i]) good.push_back(omegas[i]);
        else spdlog::warn("{}", errors[i]);
      }
      Histogram h = histogram(good, bins);
      std::cout << format_table(h);
      write_text(hi_json, to_json(h));
      return good.size() == records.size() ? 0 : 3;
    }
  } catch (const Error &e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception &e) {
    spdlog::error("unexpected: {}", e.what());
    return 2;
  }
  return 0;
}
