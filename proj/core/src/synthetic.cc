// src/synthetic.cc

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

#include "bridge_oa/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "bridge_oa/error.h"

namespace bridge_oa {

namespace fs = std::filesystem;

void SyntheticConfig::validate() const {
  if (num_utterances <= 0) throw InvalidArgument("synthetic corpus needs utterances");
  if (!(min_snr_db <= max_snr_db)) throw InvalidArgument("min_snr_db > max_snr_db");
  if (words_per_utterance <= 0 || word_seconds <= 0.0 || lead_seconds < 0.0)
    throw InvalidArgument("bad synthetic utterance layout");
  if (!(tone_amplitude > 0.0 && tone_amplitude < 0.5))
    throw InvalidArgument("tone amplitude must lie in (0, 0.5)");
  if (sample_rate <= 0) throw InvalidArgument("bad sample rate");
  if (!is_valid_subset(subset)) throw InvalidArgument("bad subset " + subset);
}

const std::vector<std::pair<std::string, double>> &synthetic_vocabulary() {
  static const std::vector<std::pair<std::string, double>> kVocab = {
      {"alpha", 350.0},  {"bravo", 500.0},  {"charlie", 650.0}, {"delta", 800.0},
      {"echo", 1000.0},  {"foxtrot", 1250.0}, {"golf", 1500.0}, {"hotel", 1800.0}};
  return kVocab;
}

std::vector<SyntheticUtterance> make_synthetic_corpus(const SyntheticConfig &cfg) {
  cfg.validate();
  const auto &vocab = synthetic_vocabulary();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> snr_dist(cfg.min_snr_db, cfg.max_snr_db);
  std::uniform_int_distribution<std::size_t> word_dist(0, vocab.size() - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto lead = static_cast<std::size_t>(std::lround(cfg.lead_seconds * cfg.sample_rate));
  const auto word_len =
      static_cast<std::size_t>(std::lround(cfg.word_seconds * cfg.sample_rate));
  const std::size_t total = lead + word_len * cfg.words_per_utterance;
  // Short raised-cosine ramps keep the tone boundaries from clicking.
  const std::size_t ramp = std::min<std::size_t>(word_len / 4, 80);

  std::vector<SyntheticUtterance> out;
  out.reserve(cfg.num_utterances);
  for (int u = 0; u < cfg.num_utterances; ++u) {
    SyntheticUtterance utt;
    std::ostringstream id;
    id << cfg.id_prefix << '_';
    id.width(5);
    id.fill('0');
    id << u;
    utt.utt_id = id.str();
    const double target_snr = snr_dist(rng);

    utt.clean.sample_rate = cfg.sample_rate;
    utt.clean.samples.assign(total, 0.0);
    std::string text;
    for (int w = 0; w < cfg.words_per_utterance; ++w) {
      const auto &[word, freq] = vocab[word_dist(rng)];
      if (!text.empty()) text += ' ';
      text += word;
      const std::size_t offset = lead + w * word_len;
      for (std::size_t n = 0; n < word_len; ++n) {
        double env = 1.0;
        if (n < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * n / ramp);
        else if (word_len - 1 - n < ramp)
          env = 0.5 - 0.5 * std::cos(std::numbers::pi * (word_len - 1 - n) / ramp);
        utt.clean.samples[offset + n] =
            cfg.tone_amplitude * env *
            std::sin(2.0 * std::numbers::pi * freq * n / cfg.sample_rate);
      }
    }
    utt.transcript = text;

    std::vector<double> noise(total);
    double pn = 0.0, pc = 0.0;
    for (std::size_t n = 0; n < total; ++n) {
      noise[n] = gauss(rng);
      pn += noise[n] * noise[n];
      pc += utt.clean.samples[n] * utt.clean.samples[n];
    }
    const double scale = std::sqrt(pc / (pn * std::pow(10.0, target_snr / 10.0)));
    utt.noisy.sample_rate = cfg.sample_rate;
    utt.noisy.samples.resize(total);
    for (std::size_t n = 0; n < total; ++n)
      utt.noisy.samples[n] = utt.clean.samples[n] + scale * noise[n];
    utt.snr_db = snr_db(utt.clean.samples, utt.noisy.samples);
    out.push_back(std::move(utt));
  }
  return out;
}

std::vector<ManifestRecord> write_synthetic_corpus(const std::vector<SyntheticUtterance> &utts,
                                                   const fs::path &dir,
                                                   const Enhancer *enhancer,
                                                   const std::string &subset) {
  const fs::path root = fs::absolute(dir);
  fs::create_directories(root / "clean");
  fs::create_directories(root / "noisy");
  if (enhancer) fs::create_directories(root / "enhanced");
  std::vector<ManifestRecord> records(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const SyntheticUtterance &u = utts[i];
    ManifestRecord &rec = records[i];
    rec.utt_id = u.utt_id;
    rec.subset = subset;
    rec.transcript = u.transcript;
    rec.snr_db = u.snr_db;
    rec.clean_path = root / "clean" / (u.utt_id + ".wav");
    rec.noisy_path = root / "noisy" / (u.utt_id + ".wav");
    save_wav(u.clean, *rec.clean_path);
    save_wav(u.noisy, rec.noisy_path);
    if (enhancer) {
      // Enhance what a reader of the file would see, i.e. the quantised audio.
      Waveform x = load_wav(rec.noisy_path);
      rec.enhanced_path = root / "enhanced" / (u.utt_id + ".wav");
      save_wav(enhancer->enhance(x, {u.utt_id, std::nullopt, &rec}), *rec.enhanced_path);
    }
  }
  write_manifest(root / "manifest.jsonl", records);
  return records;
}

std::size_t scripted_error_count(double omega, double best, const OaGrid &grid) {
  const auto a = static_cast<long>(grid.nearest_descending_index(omega));
  const auto b = static_cast<long>(grid.nearest_descending_index(best));
  return static_cast<std::size_t>(std::labs(a - b));
}

void write_scripted_asr_table(const std::vector<ManifestRecord> &records, const OaGrid &grid,
                              const std::function<double(const ManifestRecord &)> &best,
                              const fs::path &path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os.precision(17);
  for (const ManifestRecord &rec : records) {
    Transcript ref = normalize_text(rec.transcript);
    if (ref.size() + 1 < grid.size())
      throw InvalidArgument(rec.utt_id + ": too few reference words for a scripted table");
    const double b = best(rec);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w = grid.descending_at(i);
      const std::size_t e = scripted_error_count(w, b, grid);
      std::string hyp;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!hyp.empty()) hyp += ' ';
        hyp += j < e ? "zulu" : ref.words[j];
      }
      os << rec.utt_id << '\t' << w << '\t' << hyp << '\n';
    }
  }
  if (!os) throw IoError("write failed for " + path.string());
}

double synthetic_best_omega(double snr, const OaGrid &grid) {
  const double w = std::clamp((snr + 5.0) / 25.0, 0.0, 1.0);
  return grid.descending_at(grid.nearest_descending_index(w));
}

}  // namespace bridge_oa
