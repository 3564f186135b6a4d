// src/pipeline.cc

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

#include "bridge_oa/pipeline.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "bridge_oa/checkpoint.h"
#include "bridge_oa/error.h"
#include "bridge_oa/hash.h"
#include "bridge_oa/parallel.h"

namespace bridge_oa {

using nlohmann::ordered_json;

BridgeModel BridgeModel::load(const std::filesystem::path &checkpoint,
                              std::optional<Strategy> strategy, const FbankConfig &fbank) {
  Checkpoint ck = load_checkpoint(checkpoint);
  BridgeModel m;
  m.config = ck.config;
  m.params = std::move(ck.params);
  m.fbank = fbank;
  if (fbank.n_mels != m.config.n_mels)
    throw ShapeError("checkpoint expects " + std::to_string(m.config.n_mels) +
                     " mel bands, feature config has " + std::to_string(fbank.n_mels));
  if (auto it = ck.meta.find("fbank"); it != ck.meta.end() && it->second != fbank.fingerprint())
    throw InvalidArgument("feature configuration differs from the one used in training: " +
                          it->second);
  if (strategy) {
    m.strategy = *strategy;
  } else if (auto it = ck.meta.find("strategy"); it != ck.meta.end()) {
    m.strategy = parse_strategy(it->second);
  }
  if (auto it = ck.meta.find("oa_step"); it != ck.meta.end())
    m.k = nlohmann::json::parse(it->second).get<double>();
  return m;
}

std::string BridgeModel::fingerprint() const {
  std::ostringstream os;
  os << config.fingerprint() << ';' << fbank.fingerprint() << ";strategy=" << to_string(strategy)
     << ";k=" << k;
  // Weights matter too: hash them.
  std::string bytes;
  for (const auto &[name, t] : params.entries()) {
    bytes += name;
    bytes.append(reinterpret_cast<const char *>(t.data.data()), t.data.size() * sizeof(double));
  }
  os << ";weights=" << short_hash(bytes);
  return os.str();
}

std::string OmegaSource::describe() const {
  if (fixed) {
    std::ostringstream os;
    os << "fixed-omega=" << *fixed;
    return os.str();
  }
  if (model) return "model:" + model->fingerprint();
  return "none";
}

namespace {

template <class Fn>
auto stage(const std::string &utt_id, const char *name, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception &e) {
    std::string msg = e.what();
    const std::string tag = "[" + utt_id + "] ";
    if (msg.rfind(tag, 0) == 0) msg.erase(0, tag.size());
    throw BackendError(utt_id, std::string(name) + ": " + msg);
  }
}

double model_omega(const ManifestRecord &rec, const BridgeModel &model, const Waveform &x,
                   const Waveform &y) {
  auto [fx, fy] = stage(rec.utt_id, "features", [&] {
    return std::make_pair(fbank(x, model.fbank), fbank(y, model.fbank));
  });
  return stage(rec.utt_id, "bridge", [&] {
    ForwardOutput out = forward(fx, fy, model.params, model.config);
    return select_omega(out, model.strategy, OaGrid(model.k));
  });
}

std::pair<Waveform, Waveform> load_and_enhance(const ManifestRecord &rec,
                                               const Enhancer &enhancer) {
  Waveform x = stage(rec.utt_id, "load", [&] { return load_noisy(rec); });
  Waveform y = stage(rec.utt_id, "enhance", [&] {
    return enhancer.enhance(x, {rec.utt_id, std::nullopt, &rec});
  });
  return stage(rec.utt_id, "enhance", [&] { return align_pair(x, y); });
}

}  // namespace

InferenceResult infer_utterance(const ManifestRecord &rec, const OmegaSource &source,
                                const Enhancer &enhancer, const Recognizer &recognizer) {
  if (!source.fixed && !source.model)
    throw InvalidArgument("infer_utterance: no coefficient source");
  auto [x, y] = load_and_enhance(rec, enhancer);
  InferenceResult r;
  r.utt_id = rec.utt_id;
  r.omega = source.fixed ? *source.fixed : model_omega(rec, *source.model, x, y);
  r.blended = stage(rec.utt_id, "blend", [&] { return oa_blend(x, y, r.omega); });
  r.hypothesis = stage(rec.utt_id, "recognise", [&] {
    return recognizer.transcribe(r.blended, {rec.utt_id, r.omega, &rec});
  });
  return r;
}

double infer_omega(const ManifestRecord &rec, const BridgeModel &model,
                   const Enhancer &enhancer) {
  auto [x, y] = load_and_enhance(rec, enhancer);
  return model_omega(rec, model, x, y);
}

double WerTally::wer() const {
  return ref_words ? static_cast<double>(errors) / static_cast<double>(ref_words) : 0.0;
}

void WerTally::add(std::size_t e, std::size_t n) {
  errors += e;
  ref_words += n;
  ++utterances;
}

EvalReport evaluate(const std::vector<ManifestRecord> &records, const OmegaSource &source,
                    const Enhancer &enhancer, const Recognizer &recognizer, int workers) {
  require_transcripts(records);
  std::vector<std::optional<UtteranceRow>> rows(records.size());
  std::vector<std::string> errors(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const ManifestRecord &rec = records[i];
    try {
      InferenceResult r = infer_utterance(rec, source, enhancer, recognizer);
      Transcript ref = normalize_text(rec.transcript);
      EditCounts c = edit_distance(ref, normalize_text(r.hypothesis));
      rows[i] = UtteranceRow{rec.utt_id, rec.subset, r.omega, c.errors(), ref.size(),
                             static_cast<double>(c.errors()) / ref.size(), r.hypothesis};
    } catch (const Error &e) {
      errors[i] = e.what();
    }
  });
  EvalReport report;
  report.fingerprint = "omega=" + source.describe() + ";enhancer=" +
                       enhancer.descriptor().id + ";recognizer=" + recognizer.descriptor().id;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!rows[i]) {
      report.failures.push_back({records[i].utt_id, errors[i]});
      continue;
    }
    const UtteranceRow &row = *rows[i];
    report.subsets[row.subset].add(row.errors, row.ref_words);
    report.overall.add(row.errors, row.ref_words);
    report.rows.push_back(row);
  }
  return report;
}

SweepReport sweep(const std::vector<ManifestRecord> &records, const OaGrid &grid,
                  const Enhancer &enhancer, const Recognizer &recognizer,
                  WerVectorCache *cache, int workers) {
  require_transcripts(records);
  WerBuildResult built = build_wer_vectors(records, grid, enhancer, recognizer, cache, workers);
  SweepReport report;
  report.failures = built.failures;
  report.reused = built.reused;
  report.computed = built.computed;
  report.fingerprint = grid.fingerprint() + ";enhancer=" + enhancer.descriptor().id +
                       ";recognizer=" + recognizer.descriptor().id;
  report.rows.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) report.rows[i].omega = grid.descending_at(i);
  for (const ManifestRecord &rec : records) {
    auto it = built.vectors.find(rec.utt_id);
    if (it == built.vectors.end()) continue;
    for (std::size_t i = 0; i < grid.size(); ++i)
      report.rows[i].tally.add(it->second.errors[i], it->second.ref_words);
  }
  return report;
}

std::size_t Histogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

Histogram histogram(const std::vector<double> &omegas, int bins) {
  if (bins <= 0) throw InvalidArgument("histogram needs at least one bin");
  Histogram h;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(i) / bins);
  h.counts.assign(bins, 0);
  for (double w : omegas) {
    if (!(w >= 0.0 && w <= 1.0))
      throw InvalidArgument("histogram: coefficient outside [0, 1]");
    // Number of left edges not above w, minus one; the last bin is closed.
    auto it = std::upper_bound(h.edges.begin(), h.edges.end() - 1, w);
    std::size_t bin = static_cast<std::size_t>(it - h.edges.begin()) - 1;
    h.counts[std::min<std::size_t>(bin, bins - 1)]++;
  }
  return h;
}

namespace {

ordered_json tally_json(const WerTally &t) {
  return ordered_json{{"wer", t.wer()},
                      {"errors", t.errors},
                      {"ref_words", t.ref_words},
                      {"utterances", t.utterances}};
}

ordered_json failures_json(const std::vector<UtteranceFailure> &f) {
  ordered_json a = ordered_json::array();
  for (const auto &x : f) a.push_back({{"utt_id", x.utt_id}, {"error", x.message}});
  return a;
}

// Column-aligned text table; first column left-aligned, the rest right
// (or left as well with `left_last`).
std::string render(const std::vector<std::vector<std::string>> &rows, bool left_last = false) {
  std::vector<std::size_t> width;
  for (const auto &r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c) os << "  ";
      const bool left = c == 0 || (left_last && c + 1 == rows[i].size());
      os << (left ? std::left : std::right);
      os << std::setw(static_cast<int>(width[c])) << rows[i][c];
    }
    os << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string to_json(const EvalReport &r) {
  ordered_json j;
  j["fingerprint"] = r.fingerprint;
  ordered_json subsets = ordered_json::object();
  for (const auto &[name, t] : r.subsets) subsets[name] = tally_json(t);
  j["subsets"] = subsets;
  j["overall"] = tally_json(r.overall);
  j["failed_utterances"] = r.failures.size();
  j["failures"] = failures_json(r.failures);
  ordered_json rows = ordered_json::array();
  for (const auto &u : r.rows)
    rows.push_back({{"utt_id", u.utt_id},
                    {"subset", u.subset},
                    {"omega", u.omega},
                    {"wer", u.wer},
                    {"errors", u.errors},
                    {"ref_words", u.ref_words},
                    {"hypothesis", u.hypothesis}});
  j["utterances"] = rows;
  return j.dump(2);
}

std::string to_json(const SweepReport &r) {
  ordered_json j;
  j["fingerprint"] = r.fingerprint;
  ordered_json rows = ordered_json::array();
  for (const auto &row : r.rows) {
    ordered_json t = tally_json(row.tally);
    rows.push_back({{"omega", row.omega}, {"wer", t["wer"]}, {"errors", t["errors"]},
                    {"ref_words", t["ref_words"]}, {"utterances", t["utterances"]}});
  }
  j["rows"] = rows;
  j["reused"] = r.reused;
  j["computed"] = r.computed;
  j["failed_utterances"] = r.failures.size();
  j["failures"] = failures_json(r.failures);
  return j.dump(2);
}

std::string to_json(const Histogram &h) {
  ordered_json j;
  ordered_json bins = ordered_json::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    bins.push_back({{"lo", h.edges[i]},
                    {"hi", h.edges[i + 1]},
                    {"closed", i + 1 == h.counts.size() ? "both" : "left"},
                    {"count", h.counts[i]}});
  j["bins"] = bins;
  j["total"] = h.total();
  return j.dump(2);
}

std::string format_table(const EvalReport &r, bool per_utterance) {
  std::vector<std::vector<std::string>> rows = {{"subset", "WER(%)", "errors", "words", "utts"}};
  for (const auto &[name, t] : r.subsets)
    rows.push_back({name, fixed(100.0 * t.wer(), 2), std::to_string(t.errors),
                    std::to_string(t.ref_words), std::to_string(t.utterances)});
  const WerTally &o = r.overall;
  rows.push_back({"overall", fixed(100.0 * o.wer(), 2), std::to_string(o.errors),
                  std::to_string(o.ref_words), std::to_string(o.utterances)});
  std::string out = render(rows);
  if (!r.failures.empty())
    out += "failed utterances (excluded): " + std::to_string(r.failures.size()) + "\n";
  if (per_utterance) {
    std::vector<std::vector<std::string>> urows = {{"utt_id", "subset", "omega", "WER(%)"}};
    for (const auto &u : r.rows)
      urows.push_back({u.utt_id, u.subset, fixed(u.omega, 4), fixed(100.0 * u.wer, 2)});
    out += "\n" + render(urows);
  }
  return out;
}

std::string format_table(const SweepReport &r) {
  std::vector<std::vector<std::string>> rows = {{"omega", "WER(%)", "errors", "words"}};
  for (const auto &row : r.rows)
    rows.push_back({fixed(row.omega, 2), fixed(100.0 * row.tally.wer(), 2),
                    std::to_string(row.tally.errors), std::to_string(row.tally.ref_words)});
  std::string out = render(rows);
  if (!r.failures.empty())
    out += "failed utterances (excluded): " + std::to_string(r.failures.size()) + "\n";
  return out;
}

std::string format_table(const Histogram &h, int bar_width) {
  std::size_t peak = 1;
  for (auto c : h.counts) peak = std::max(peak, c);
  std::vector<std::vector<std::string>> rows = {{"bin", "count", ""}};
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const bool last = i + 1 == h.counts.size();
    std::string label = "[" + fixed(h.edges[i], 2) + ", " + fixed(h.edges[i + 1], 2) +
                        (last ? "]" : ")");
    const auto len = static_cast<std::size_t>(
        std::lround(static_cast<double>(bar_width) * h.counts[i] / peak));
    rows.push_back({label, std::to_string(h.counts[i]), std::string(len, '#')});
  }
  return render(rows, true);
}

}  // namespace bridge_oa
