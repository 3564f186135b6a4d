// src/manifest.cc

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

#include "bridge_oa/manifest.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "bridge_oa/error.h"

namespace bridge_oa {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path &base, const fs::path &p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::optional<std::string> infer_subset(const fs::path &file) {
  static const std::regex kPattern(R"((tr|dt|et)\d*_.*(simu|real))");
  for (auto it = file.begin(); it != file.end(); ++it) {
    std::smatch m;
    std::string part = it->string();
    if (std::regex_match(part, m, kPattern)) return m[1].str() + "_" + m[2].str();
  }
  return std::nullopt;
}

}  // namespace

bool ManifestRecord::has_transcript() const {
  return transcript.find_first_not_of(" \t\r\n") != std::string::npos;
}

bool is_valid_subset(const std::string &subset) {
  static const std::set<std::string> kSubsets = {"tr_simu", "tr_real", "dt_simu",
                                                 "dt_real", "et_simu", "et_real"};
  return kSubsets.count(subset) != 0;
}

std::vector<ManifestRecord> read_manifest(const fs::path &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ManifestRecord r;
    try {
      r.utt_id = j.at("utt_id").get<std::string>();
      r.noisy_path = resolve(base, j.at("noisy_path").get<std::string>());
      r.subset = j.at("subset").get<std::string>();
      if (j.contains("transcript")) r.transcript = j["transcript"].get<std::string>();
      if (j.contains("enhanced_path") && !j["enhanced_path"].is_null())
        r.enhanced_path = resolve(base, j["enhanced_path"].get<std::string>());
      if (j.contains("clean_path") && !j["clean_path"].is_null())
        r.clean_path = resolve(base, j["clean_path"].get<std::string>());
      if (j.contains("snr_db") && !j["snr_db"].is_null())
        r.snr_db = j["snr_db"].get<double>();
      if (j.contains("channel") && !j["channel"].is_null())
        r.channel = j["channel"].get<int>();
    } catch (const nlohmann::json::exception &e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (r.utt_id.empty())
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) +
                            ": empty utt_id");
    if (!is_valid_subset(r.subset))
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) +
                            ": invalid subset '" + r.subset + "'");
    if (!seen.insert(r.utt_id).second)
      throw InvalidArgument(path.string() + ": duplicate utt_id " + r.utt_id);
    out.push_back(std::move(r));
  }
  return out;
}

void write_manifest(const fs::path &path, const std::vector<ManifestRecord> &records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write manifest " + path.string());
  for (const auto &r : records) {
    nlohmann::json j;
    j["utt_id"] = r.utt_id;
    j["noisy_path"] = r.noisy_path.string();
    if (r.enhanced_path) j["enhanced_path"] = r.enhanced_path->string();
    j["transcript"] = r.transcript;
    j["subset"] = r.subset;
    if (r.clean_path) j["clean_path"] = r.clean_path->string();
    if (r.snr_db) j["snr_db"] = *r.snr_db;
    if (r.channel) j["channel"] = *r.channel;
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<ManifestRecord> filter_subsets(const std::vector<ManifestRecord> &records,
                                           const std::set<std::string> &subsets) {
  if (subsets.empty()) return records;
  std::vector<ManifestRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const ManifestRecord &r) { return subsets.count(r.subset) != 0; });
  return out;
}

void require_transcripts(const std::vector<ManifestRecord> &records) {
  std::vector<std::string> missing;
  for (const auto &r : records)
    if (!r.has_transcript()) missing.push_back(r.utt_id);
  if (missing.empty()) return;
  std::ostringstream msg;
  msg << missing.size() << " utterance(s) lack a reference transcript:";
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
  if (missing.size() > 20) msg << " ...";
  throw InvalidArgument(msg.str());
}

std::vector<ManifestRecord> scan_corpus(const fs::path &audio_root,
                                        const fs::path &transcripts,
                                        const ScanOptions &opts) {
  std::map<std::string, std::string> text;
  {
    std::ifstream is(transcripts);
    if (!is) throw IoError("cannot open transcripts " + transcripts.string());
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string id;
      if (!(ls >> id)) continue;
      std::string rest;
      std::getline(ls, rest);
      rest.erase(0, rest.find_first_not_of(" \t"));
      text[id] = rest;
    }
  }
  if (!fs::is_directory(audio_root))
    throw IoError("not a directory: " + audio_root.string());

  std::vector<fs::path> files;
  for (const auto &entry : fs::recursive_directory_iterator(audio_root)) {
    if (!entry.is_regular_file()) continue;
    const auto &p = entry.path();
    std::string name = p.filename().string();
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower.size() < 4 || lower.substr(lower.size() - 4) != ".wav") continue;
    if (!opts.channel_tag.empty() && name.find(opts.channel_tag) == std::string::npos)
      continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());

  std::vector<ManifestRecord> out;
  std::unordered_set<std::string> seen;
  for (const auto &p : files) {
    std::string name = p.filename().string();
    std::string id = p.stem().string();
    if (!opts.channel_tag.empty()) {
      auto pos = name.find(opts.channel_tag);
      id = name.substr(0, pos);
    }
    ManifestRecord r;
    r.utt_id = id;
    r.noisy_path = fs::absolute(p);
    auto rel = fs::relative(p, audio_root);
    std::optional<std::string> subset = opts.subset ? opts.subset : infer_subset(rel);
    if (!subset || !is_valid_subset(*subset))
      throw InvalidArgument("cannot determine subset of " + p.string() +
                            "; pass one explicitly");
    r.subset = *subset;
    if (auto it = text.find(id); it != text.end()) r.transcript = it->second;
    if (opts.enhanced_root) {
      auto enh = *opts.enhanced_root / rel;
      if (fs::exists(enh)) r.enhanced_path = fs::absolute(enh);
    }
    if (!seen.insert(r.utt_id).second)
      throw InvalidArgument("duplicate utterance id while scanning: " + r.utt_id);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bridge_oa
