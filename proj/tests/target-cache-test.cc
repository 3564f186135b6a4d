// tests/target-cache-test.cc

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

#include <atomic>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bridge_oa/error.h"
#include "bridge_oa/target_cache.h"
#include "fakes.h"
#include "test-util.h"

namespace bridge_oa {
namespace {

using namespace testing;
namespace fs = std::filesystem;

const std::unique_ptr<Enhancer> &identity() {
  static auto e =
      make_enhancer(BackendDescriptor::parse(BackendKind::kEnhancer, "builtin:identity"));
  return e;
}

TEST(WerVector, ThresholdFakeAsr) {
  WavCorpus c(1);
  ThresholdAsr asr;
  WerVector v = build_wer_vector(c.records[0], OaGrid(0.1), *identity(), asr);
  const std::vector<double> want = {0, 0, 0, 0, 0, 0, .25, .25, .25, .25, .25};
  EXPECT_EQ(v.values, want);
  EXPECT_EQ(v.ref_words, 4u);
  EXPECT_EQ(v.errors, (std::vector<std::size_t>{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
  EXPECT_EQ(build_wer_vector(c.records[0], OaGrid(0.05), *identity(), asr).values.size(), 21u);
}

TEST(WerVector, PerfectAsrGivesZeros) {
  WavCorpus c(1);
  auto oracle =
      make_recognizer(BackendDescriptor::parse(BackendKind::kRecognizer, "builtin:oracle"));
  WerVector v = build_wer_vector(c.records[0], OaGrid(0.1), *identity(), *oracle);
  EXPECT_EQ(v.values, std::vector<double>(11, 0.0));
}

TEST(WerVector, MissingTranscriptIsAnUtteranceError) {
  WavCorpus c(1, "");
  ThresholdAsr asr;
  EXPECT_THROW(build_wer_vector(c.records[0], OaGrid(0.1), *identity(), asr), BackendError);
  auto r = build_wer_vectors(c.records, OaGrid(0.1), *identity(), asr, nullptr);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].utt_id, "u0");
}

TEST(WerVector, ReproducibleAcrossWorkerCounts) {
  WavCorpus c(9);
  OffsetEnhancer enh;
  EnergyAsr asr;
  auto one = build_wer_vectors(c.records, OaGrid(0.1), enh, asr, nullptr, 1);
  auto four = build_wer_vectors(c.records, OaGrid(0.1), enh, asr, nullptr, 4);
  auto again = build_wer_vectors(c.records, OaGrid(0.1), enh, asr, nullptr, 3);
  ASSERT_EQ(one.vectors.size(), 9u);
  bool varies = false;
  for (const auto &[id, v] : one.vectors) {
    EXPECT_EQ(v.values, four.vectors.at(id).values);
    EXPECT_EQ(v.values, again.vectors.at(id).values);
    varies |= v.values.front() != v.values.back();
  }
  EXPECT_TRUE(varies);
}

TEST(WerVectorCache, ResumeReusesStoredVectors) {
  WavCorpus c(5);
  testing::TempDir cache_dir;
  OaGrid grid(0.1);
  ThresholdAsr asr;
  {
    WerVectorCache cache(cache_dir.path(), grid, "builtin:identity", asr.descriptor().id);
    std::vector<ManifestRecord> first(c.records.begin(), c.records.begin() + 2);
    auto r = build_wer_vectors(first, grid, *identity(), asr, &cache);
    EXPECT_EQ(r.computed, 2u);
    EXPECT_EQ(asr.calls.load(), 22);
  }
  WerVectorCache cache(cache_dir.path(), grid, "builtin:identity", asr.descriptor().id);
  EXPECT_EQ(cache.size(), 2u);
  auto r = build_wer_vectors(c.records, grid, *identity(), asr, &cache);
  EXPECT_EQ(r.reused, 2u);
  EXPECT_EQ(r.computed, 3u);
  EXPECT_EQ(asr.calls.load(), 55);
  EXPECT_EQ(r.vectors.size(), 5u);
  EXPECT_EQ(cache.get("u0")->values, r.vectors.at("u4").values);

  // The cache file is JSON lines with the documented fields.
  std::ifstream is(cache.path());
  std::string line;
  std::getline(is, line);
  for (const char *key : {"\"utt_id\"", "\"backend_ids\"", "\"grid\"", "\"values\"",
                          "\"created_at\""})
    EXPECT_NE(line.find(key), std::string::npos) << key;
}

TEST(WerVectorCache, KeyedByGridAndBackendIds) {
  testing::TempDir dir;
  OaGrid g1(0.1), g2(0.05);
  WerVectorCache a(dir.path(), g1, "enh", "asr");
  WerVectorCache b(dir.path(), g1, "enh", "asr-v2");
  WerVectorCache c(dir.path(), g2, "enh", "asr");
  WerVectorCache d(dir.path(), g1, "enh2", "asr");
  EXPECT_NE(a.path(), b.path());
  EXPECT_NE(a.path(), c.path());
  EXPECT_NE(a.path(), d.path());
  a.put("u", {std::vector<double>(11, 0.0), std::vector<std::size_t>(11, 0), 3});
  EXPECT_TRUE(WerVectorCache(dir.path(), g1, "enh", "asr").get("u").has_value());
  EXPECT_FALSE(WerVectorCache(dir.path(), g1, "enh", "asr-v2").get("u").has_value());
}

TEST(PqTargets, FailureRecordedAndRetried) {
  WavCorpus c(3);
  testing::TempDir cache_dir;
  {
    PqTargetCache cache(cache_dir.path(), "fake-mos");
    FlakyScorer scorer("u1");
    auto r = build_pq_targets(c.records, scorer, &cache);
    EXPECT_EQ(r.targets.size(), 2u);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].utt_id, "u1");
    EXPECT_EQ(r.targets.at("u0").target, 1.0);
  }
  PqTargetCache cache(cache_dir.path(), "fake-mos");
  EXPECT_EQ(cache.size(), 2u);
  ASSERT_EQ(cache.failures().size(), 1u);
  EXPECT_FALSE(cache.get("u1").has_value());

  FlakyScorer fixed("none");
  auto r = build_pq_targets(c.records, fixed, &cache);
  EXPECT_EQ(r.reused, 2u);
  EXPECT_EQ(r.computed, 1u);
  EXPECT_TRUE(r.failures.empty());
  PqTargetCache reread(cache_dir.path(), "fake-mos");
  EXPECT_EQ(reread.size(), 3u);
  EXPECT_TRUE(reread.failures().empty());
  EXPECT_NE(PqTargetCache(cache_dir.path(), "other-mos").path(), reread.path());
}

TEST(PqTargets, SyntheticScorerThroughSnr) {
  WavCorpus c(2);
  c.records[0].snr_db = 0.0;
  c.records[1].snr_db = 40.0;
  auto s = make_scorer(BackendDescriptor::parse(BackendKind::kScorer, "builtin:synthetic-snr"));
  auto r = build_pq_targets(c.records, *s, nullptr, 2);
  EXPECT_EQ(r.targets.at("u0").target, 0.5);
  EXPECT_EQ(r.targets.at("u1").target, 1.0);
}

TEST(CacheRoot, EnvironmentOverride) {
  ::setenv("BRIDGE_OA_CACHE_DIR", "/tmp/some-cache", 1);
  EXPECT_EQ(default_cache_root(), fs::path("/tmp/some-cache"));
  ::unsetenv("BRIDGE_OA_CACHE_DIR");
  EXPECT_EQ(default_cache_root(), fs::path(".bridge_oa_cache"));
}

}  // namespace
}  // namespace bridge_oa
