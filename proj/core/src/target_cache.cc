// src/target_cache.cc

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

#include "bridge_oa/target_cache.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <tuple>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "bridge_oa/error.h"
#include "bridge_oa/hash.h"
#include "bridge_oa/parallel.h"

namespace bridge_oa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Appends one line and flushes; callers hold the cache mutex.
void append_line(const fs::path &path, const json &j) {
  std::ofstream os(path, std::ios::app);
  if (!os) throw IoError("cannot append to cache " + path.string());
  os << j.dump() << '\n';
  os.flush();
  if (!os) throw IoError("write failed for cache " + path.string());
}

template <class Fn>
void for_each_record(const fs::path &path, Fn &&fn) {
  std::ifstream is(path);
  if (!is) return;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception &e) {
      // An interrupted writer can leave a partial last line.
      spdlog::warn("{}:{}: skipping unreadable cache line ({})", path.string(), lineno,
                   e.what());
    }
  }
}

}  // namespace

fs::path default_cache_root() {
  if (const char *env = std::getenv("BRIDGE_OA_CACHE_DIR"); env && *env) return env;
  return fs::path(".bridge_oa_cache");
}

WerVectorCache::WerVectorCache(const fs::path &root, const OaGrid &grid,
                               const std::string &enhancer_id,
                               const std::string &recognizer_id)
    : grid_(grid.descending()), enhancer_id_(enhancer_id), recognizer_id_(recognizer_id) {
  fs::create_directories(root / "wer_vectors");
  const std::string key = grid.fingerprint() + "\n" + enhancer_id + "\n" + recognizer_id;
  path_ = root / "wer_vectors" / (short_hash(key) + ".jsonl");
  for_each_record(path_, [this](const json &j) {
    WerVector v;
    v.values = j.at("values").get<std::vector<double>>();
    v.errors = j.at("errors").get<std::vector<std::size_t>>();
    v.ref_words = j.at("ref_words").get<std::size_t>();
    if (v.values.size() != grid_.size() || v.errors.size() != grid_.size())
      throw json::other_error::create(501, "record length does not match grid", nullptr);
    entries_[j.at("utt_id").get<std::string>()] = std::move(v);
  });
}

std::optional<WerVector> WerVectorCache::get(const std::string &utt_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(utt_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void WerVectorCache::put(const std::string &utt_id, const WerVector &v) {
  json j = {{"utt_id", utt_id},
            {"backend_ids", {{"enhancer", enhancer_id_}, {"recognizer", recognizer_id_}}},
            {"grid", grid_},
            {"values", v.values},
            {"errors", v.errors},
            {"ref_words", v.ref_words},
            {"created_at", utc_now()}};
  std::lock_guard<std::mutex> lock(mu_);
  append_line(path_, j);
  entries_[utt_id] = v;
}

std::size_t WerVectorCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

PqTargetCache::PqTargetCache(const fs::path &root, const std::string &scorer_id)
    : scorer_id_(scorer_id) {
  fs::create_directories(root / "pq_targets");
  path_ = root / "pq_targets" / (short_hash(scorer_id) + ".jsonl");
  for_each_record(path_, [this](const json &j) {
    std::string id = j.at("utt_id").get<std::string>();
    if (j.contains("error")) {
      failures_[id] = j["error"].get<std::string>();
      return;
    }
    PqTarget t;
    t.target = j.at("values").at(0).get<double>();
    t.mos = {j.at("sig").get<double>(), j.at("bak").get<double>()};
    entries_[id] = t;
    failures_.erase(id);
  });
}

std::optional<PqTarget> PqTargetCache::get(const std::string &utt_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(utt_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void PqTargetCache::put(const std::string &utt_id, const PqTarget &t) {
  json j = {{"utt_id", utt_id},       {"scorer_id", scorer_id_}, {"values", {t.target}},
            {"sig", t.mos.sig},       {"bak", t.mos.bak},        {"created_at", utc_now()}};
  std::lock_guard<std::mutex> lock(mu_);
  append_line(path_, j);
  entries_[utt_id] = t;
  failures_.erase(utt_id);
}

void PqTargetCache::put_failure(const std::string &utt_id, const std::string &message) {
  json j = {{"utt_id", utt_id},
            {"scorer_id", scorer_id_},
            {"error", message},
            {"created_at", utc_now()}};
  std::lock_guard<std::mutex> lock(mu_);
  append_line(path_, j);
  failures_[utt_id] = message;
}

std::size_t PqTargetCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

std::vector<UtteranceFailure> PqTargetCache::failures() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<UtteranceFailure> out;
  for (const auto &[id, msg] : failures_) out.push_back({id, msg});
  return out;
}

Waveform load_noisy(const ManifestRecord &rec) {
  try {
    return load_wav(rec.noisy_path, rec.channel);
  } catch (const Error &e) {
    throw BackendError(rec.utt_id, std::string("noisy audio: ") + e.what());
  }
}

std::pair<Waveform, Waveform> noisy_and_enhanced(const ManifestRecord &rec,
                                                 const Enhancer &enhancer) {
  Waveform x = load_noisy(rec);
  UtteranceContext ctx{rec.utt_id, std::nullopt, &rec};
  Waveform y = enhancer.enhance(x, ctx);
  try {
    return align_pair(x, y);
  } catch (const InvalidArgument &e) {
    throw BackendError(rec.utt_id, std::string("enhancer output: ") + e.what());
  }
}

namespace {

std::pair<double, std::size_t> score_blend(const ManifestRecord &rec, const Transcript &ref,
                                           const Waveform &x, const Waveform &y,
                                           double omega, const Recognizer &recognizer) {
  Waveform blended = oa_blend(x, y, omega);
  UtteranceContext ctx{rec.utt_id, omega, &rec};
  Transcript hyp = normalize_text(recognizer.transcribe(blended, ctx));
  EditCounts c = edit_distance(ref, hyp);
  return {static_cast<double>(c.errors()) / static_cast<double>(ref.size()), c.errors()};
}

Transcript reference_of(const ManifestRecord &rec) {
  Transcript ref = normalize_text(rec.transcript);
  if (ref.empty()) throw BackendError(rec.utt_id, "missing reference transcript");
  return ref;
}

}  // namespace

WerVector build_wer_vector(const ManifestRecord &rec, const OaGrid &grid,
                           const Enhancer &enhancer, const Recognizer &recognizer) {
  Transcript ref = reference_of(rec);
  auto [x, y] = noisy_and_enhanced(rec, enhancer);
  WerVector v;
  v.ref_words = ref.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto [w, e] = score_blend(rec, ref, x, y, grid.descending_at(i), recognizer);
    v.values.push_back(w);
    v.errors.push_back(e);
  }
  return v;
}

WerBuildResult build_wer_vectors(const std::vector<ManifestRecord> &records,
                                 const OaGrid &grid, const Enhancer &enhancer,
                                 const Recognizer &recognizer, WerVectorCache *cache,
                                 int workers) {
  WerBuildResult result;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (cache) {
      if (auto v = cache->get(records[i].utt_id)) {
        result.vectors[records[i].utt_id] = *v;
        ++result.reused;
        continue;
      }
    }
    todo.push_back(i);
  }

  // Utterances are processed in blocks so that only a bounded number of
  // waveform pairs is resident at once.
  const std::size_t block = static_cast<std::size_t>(std::max(1, workers)) * 4;
  const std::size_t points = grid.size();
  for (std::size_t start = 0; start < todo.size(); start += block) {
    const std::size_t count = std::min(block, todo.size() - start);
    struct Slot {
      Transcript ref;
      Waveform x, y;
      WerVector v;
      std::string error;
    };
    std::vector<Slot> slots(count);
    parallel_for(count, workers, [&](std::size_t k) {
      const ManifestRecord &rec = records[todo[start + k]];
      try {
        slots[k].ref = reference_of(rec);
        std::tie(slots[k].x, slots[k].y) = noisy_and_enhanced(rec, enhancer);
        slots[k].v.values.assign(points, 0.0);
        slots[k].v.errors.assign(points, 0);
        slots[k].v.ref_words = slots[k].ref.size();
      } catch (const Error &e) {
        slots[k].error = e.what();
      }
    });
    std::vector<std::string> point_errors(count * points);
    parallel_for(count * points, workers, [&](std::size_t job) {
      const std::size_t k = job / points, i = job % points;
      if (!slots[k].error.empty()) return;
      const ManifestRecord &rec = records[todo[start + k]];
      try {
        auto [w, e] = score_blend(rec, slots[k].ref, slots[k].x, slots[k].y,
                                  grid.descending_at(i), recognizer);
        slots[k].v.values[i] = w;
        slots[k].v.errors[i] = e;
      } catch (const Error &e) {
        point_errors[job] = e.what();
      }
    });
    // Single writer, manifest order.
    for (std::size_t k = 0; k < count; ++k) {
      const std::string &id = records[todo[start + k]].utt_id;
      std::string err = slots[k].error;
      for (std::size_t i = 0; i < points && err.empty(); ++i) err = point_errors[k * points + i];
      if (!err.empty()) {
        spdlog::warn("WER vector for {} failed: {}", id, err);
        result.failures.push_back({id, err});
        continue;
      }
      if (cache) cache->put(id, slots[k].v);
      result.vectors[id] = std::move(slots[k].v);
      ++result.computed;
    }
  }
  return result;
}

PqBuildResult build_pq_targets(const std::vector<ManifestRecord> &records,
                               const Scorer &scorer, PqTargetCache *cache, int workers) {
  PqBuildResult result;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (cache) {
      if (auto t = cache->get(records[i].utt_id)) {
        result.targets[records[i].utt_id] = *t;
        ++result.reused;
        continue;
      }
    }
    todo.push_back(i);
  }
  std::vector<std::optional<PqTarget>> out(todo.size());
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), workers, [&](std::size_t k) {
    const ManifestRecord &rec = records[todo[k]];
    try {
      Waveform x = load_noisy(rec);
      MosScore m = scorer.score(x, {rec.utt_id, std::nullopt, &rec});
      m.validate();
      out[k] = PqTarget{pq_target(m), m};
    } catch (const Error &e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < todo.size(); ++k) {
    const std::string &id = records[todo[k]].utt_id;
    if (out[k]) {
      if (cache) cache->put(id, *out[k]);
      result.targets[id] = *out[k];
      ++result.computed;
    } else {
      spdlog::warn("perceptual target for {} skipped: {}", id, errors[k]);
      if (cache) cache->put_failure(id, errors[k]);
      result.failures.push_back({id, errors[k]});
    }
  }
  return result;
}

}  // namespace bridge_oa
