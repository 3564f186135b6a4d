// tests/pipeline-test.cc

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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "bridge_oa/checkpoint.h"
#include "bridge_oa/error.h"
#include "bridge_oa/pipeline.h"
#include "fakes.h"
#include "test-util.h"

#include <json.hpp>

namespace bridge_oa {
namespace {

using testing::WavCorpus;

std::unique_ptr<Enhancer> identity() {
  return make_enhancer(BackendDescriptor::parse(BackendKind::kEnhancer, "builtin:identity"));
}

TEST(WerTally, Pooling) {
  WerTally t;
  EXPECT_EQ(t.wer(), 0.0);
  t.add(1, 4);
  t.add(2, 6);
  EXPECT_DOUBLE_EQ(t.wer(), 0.3);
  EXPECT_EQ(t.utterances, 2u);
}

TEST(Evaluate, PooledOverallAndSubsets) {
  WavCorpus c(3);
  c.records[0].transcript = "a b c d";
  c.records[1].transcript = "a b c d e f";
  c.records[2].transcript = "x y";
  c.records[2].subset = "et_simu";
  testing::TableAsr asr({{"u0", "a b c z"}, {"u1", "a c d e f g"}, {"u2", "x y"}});
  auto enh = identity();
  EvalReport r = evaluate(c.records, OmegaSource::constant(0.5), *enh, asr);
  EXPECT_EQ(r.overall.errors, 3u);
  EXPECT_EQ(r.overall.ref_words, 12u);
  EXPECT_DOUBLE_EQ(r.overall.wer(), 0.25);
  ASSERT_EQ(r.subsets.size(), 2u);
  EXPECT_DOUBLE_EQ(r.subsets.at("et_real").wer(), 0.3);  // 3 errors / 10 words
  EXPECT_EQ(r.subsets.at("et_simu").wer(), 0.0);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[1].errors, 2u);
  EXPECT_EQ(r.rows[1].omega, 0.5);

  auto only = evaluate(filter_subsets(c.records, {"et_real"}), OmegaSource::constant(0.5), *enh,
                       asr);
  ASSERT_EQ(only.subsets.size(), 1u);
  EXPECT_EQ(only.subsets.at("et_real").errors, only.overall.errors);
  EXPECT_EQ(only.subsets.at("et_real").ref_words, only.overall.ref_words);
}

TEST(Evaluate, PerfectRecognizerIsZeroEverywhere) {
  WavCorpus c(4);
  auto oracle =
      make_recognizer(BackendDescriptor::parse(BackendKind::kRecognizer, "builtin:oracle"));
  EvalReport r = evaluate(c.records, OmegaSource::constant(0.2), *identity(), *oracle);
  EXPECT_EQ(r.overall.wer(), 0.0);
  for (const auto &[s, t] : r.subsets) EXPECT_EQ(t.wer(), 0.0);
}

TEST(Evaluate, InvariantToRowOrder) {
  WavCorpus c(8);
  for (int i = 0; i < 8; ++i) c.records[i].subset = i % 2 ? "et_real" : "dt_simu";
  testing::OffsetEnhancer enh;
  testing::EnergyAsr asr;
  EvalReport a = evaluate(c.records, OmegaSource::constant(0.4), enh, asr);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 3; ++trial) {
    auto shuffled = c.records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EvalReport b = evaluate(shuffled, OmegaSource::constant(0.4), enh, asr, 1 + trial);
    EXPECT_EQ(a.overall.errors, b.overall.errors);
    EXPECT_EQ(a.overall.ref_words, b.overall.ref_words);
    for (const auto &[s, t] : a.subsets) EXPECT_EQ(t.errors, b.subsets.at(s).errors);
  }
}

TEST(Evaluate, FailedUtterancesAreListedAndExcluded) {
  WavCorpus c(3);
  c.records[1].noisy_path = c.dir.path() / "missing.wav";
  auto oracle =
      make_recognizer(BackendDescriptor::parse(BackendKind::kRecognizer, "builtin:oracle"));
  EvalReport r = evaluate(c.records, OmegaSource::constant(1.0), *identity(), *oracle);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].utt_id, "u1");
  EXPECT_EQ(r.overall.utterances, 2u);
  EXPECT_EQ(r.rows.size(), 2u);
}

TEST(Infer, IdentityEnhancerLeavesNoisyAudio) {
  WavCorpus c(1);
  Waveform x = load_wav(c.records[0].noisy_path);
  testing::ThresholdAsr asr;
  for (double w : {0.0, 0.3, 0.77, 1.0}) {
    InferenceResult r = infer_utterance(c.records[0], OmegaSource::constant(w), *identity(), asr);
    EXPECT_EQ(r.omega, w);
    ASSERT_EQ(r.blended.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      ASSERT_NEAR(r.blended.samples[i], x.samples[i], 1e-15);
  }
}

TEST(Infer, StageErrorsCarryUtteranceId) {
  WavCorpus c(1);
  ManifestRecord bad = c.records[0];
  bad.noisy_path = c.dir.path() / "gone.wav";
  testing::ThresholdAsr asr;
  try {
    infer_utterance(bad, OmegaSource::constant(0.5), *identity(), asr);
    FAIL();
  } catch (const BackendError &e) {
    EXPECT_EQ(e.utt_id(), "u0");
  }
}

class SaturatedModel : public ::testing::Test {
 protected:
  void SetUp() override {
    ModelConfig cfg = testing::tiny_model();
    Parameters p = init_params(cfg, 5);
    p.vec("pq.bias")[0] = 60.0;  // sigmoid saturates at 1
    save_checkpoint(dir_.path() / "m.ckpt", p, cfg, {{"strategy", "pq"}, {"oa_step", "0.1"}},
                    TensorDtype::kFloat64);
  }
  testing::TempDir dir_;
};

TEST_F(SaturatedModel, PqModelAtOmegaOneMatchesNoisyAudio) {
  BridgeModel m = BridgeModel::load(dir_.path() / "m.ckpt");
  EXPECT_EQ(m.strategy, Strategy::kPq);
  WavCorpus c(2);
  testing::OffsetEnhancer enh;
  testing::ThresholdAsr asr(0.95);
  for (const auto &rec : c.records) {
    InferenceResult r = infer_utterance(rec, OmegaSource::from(m), enh, asr);
    InferenceResult raw = infer_utterance(rec, OmegaSource::constant(1.0), enh, asr);
    EXPECT_NEAR(r.omega, 1.0, 1e-9);
    EXPECT_EQ(r.hypothesis, raw.hypothesis);
    for (std::size_t i = 0; i < raw.blended.size(); ++i)
      ASSERT_NEAR(r.blended.samples[i], raw.blended.samples[i], 1e-9);
  }
  EXPECT_NE(m.fingerprint().find("strategy=pq"), std::string::npos);
  BridgeModel ri = BridgeModel::load(dir_.path() / "m.ckpt", Strategy::kRi);
  EXPECT_NE(ri.fingerprint(), m.fingerprint());
}

TEST_F(SaturatedModel, FeatureConfigMustMatch) {
  FbankConfig f;
  f.n_mels = 40;
  EXPECT_THROW(BridgeModel::load(dir_.path() / "m.ckpt", std::nullopt, f), ShapeError);
}

TEST(Sweep, EndpointsMatchEvaluate) {
  WavCorpus c(6);
  testing::OffsetEnhancer enh;
  testing::EnergyAsr asr;
  SweepReport s = sweep(c.records, OaGrid(0.1), enh, asr, nullptr, 2);
  ASSERT_EQ(s.rows.size(), 11u);
  EXPECT_EQ(s.rows.front().omega, 1.0);
  EXPECT_EQ(s.rows.back().omega, 0.0);
  EvalReport noisy = evaluate(c.records, OmegaSource::constant(1.0), enh, asr);
  EvalReport enhanced = evaluate(c.records, OmegaSource::constant(0.0), enh, asr);
  EXPECT_EQ(s.rows.front().tally.errors, noisy.overall.errors);
  EXPECT_EQ(s.rows.front().tally.ref_words, noisy.overall.ref_words);
  EXPECT_EQ(s.rows.back().tally.errors, enhanced.overall.errors);
  EXPECT_NE(noisy.overall.errors, enhanced.overall.errors);
  for (std::size_t i = 1; i + 1 < s.rows.size(); ++i) {
    EvalReport mid = evaluate(c.records, OmegaSource::constant(s.rows[i].omega), enh, asr);
    EXPECT_EQ(s.rows[i].tally.errors, mid.overall.errors) << s.rows[i].omega;
  }
}

TEST(Sweep, FakeRecognizerCorrectOnlyAtOne) {
  WavCorpus c(3);
  testing::ThresholdAsr asr(1.0);
  SweepReport s = sweep(c.records, OaGrid(0.1), *identity(), asr);
  ASSERT_EQ(s.rows.size(), 11u);
  EXPECT_EQ(s.rows[0].tally.wer(), 0.0);
  for (std::size_t i = 1; i < 11; ++i) {
    EXPECT_GT(s.rows[i].tally.wer(), 0.0);
    EXPECT_EQ(s.rows[i].tally.wer(), s.rows[1].tally.wer());
  }
  EXPECT_DOUBLE_EQ(s.rows[5].tally.wer(), 0.25);  // 1 of 4 words, every utterance
}

TEST(Sweep, UsesAndFillsTheCache) {
  WavCorpus c(4);
  testing::TempDir cache_dir;
  testing::ThresholdAsr asr;
  WerVectorCache cache(cache_dir.path(), OaGrid(0.1), "builtin:identity", "fake-threshold");
  SweepReport a = sweep(c.records, OaGrid(0.1), *identity(), asr, &cache);
  EXPECT_EQ(a.computed, 4u);
  SweepReport b = sweep(c.records, OaGrid(0.1), *identity(), asr, &cache);
  EXPECT_EQ(b.reused, 4u);
  EXPECT_EQ(b.computed, 0u);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_EQ(a.rows[i].tally.errors, b.rows[i].tally.errors);
}

TEST(Histogram, Examples) {
  Histogram h = histogram(std::vector<double>(20, 0.55));
  ASSERT_EQ(h.counts.size(), 10u);
  ASSERT_EQ(h.edges.size(), 11u);
  EXPECT_EQ(h.counts[5], 20u);
  EXPECT_EQ(h.total(), 20u);
  Histogram e = histogram({0.0, 0.1, 0.9, 1.0, 0.999});
  EXPECT_EQ(e.counts[0], 1u);
  EXPECT_EQ(e.counts[1], 1u);
  EXPECT_EQ(e.counts[9], 3u);
  EXPECT_THROW(histogram({1.2}), InvalidArgument);
  EXPECT_THROW(histogram({0.5}, 0), InvalidArgument);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int bins : {1, 3, 10, 17}) {
    std::vector<double> v(333);
    for (double &x : v) x = u(rng);
    v.push_back(1.0);
    EXPECT_EQ(histogram(v, bins).total(), v.size());
  }
}

TEST(Reports, JsonAndTables) {
  WavCorpus c(2);
  testing::ThresholdAsr asr;
  SweepReport s = sweep(c.records, OaGrid(0.1), *identity(), asr);
  auto js = nlohmann::json::parse(to_json(s));
  ASSERT_EQ(js.at("rows").size(), 11u);
  EXPECT_EQ(js["rows"][0]["omega"].get<double>(), 1.0);
  const std::string table = format_table(s);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 13);  // header, rule, 11 rows

  EvalReport r = evaluate(c.records, OmegaSource::constant(0.3), *identity(), asr);
  auto je = nlohmann::json::parse(to_json(r));
  EXPECT_TRUE(je.contains("overall"));
  EXPECT_TRUE(je.contains("subsets"));
  EXPECT_NE(format_table(r, true).find("u1"), std::string::npos);

  Histogram h = histogram({0.1, 0.15, 0.8});
  auto jh = nlohmann::json::parse(to_json(h));
  ASSERT_EQ(jh.at("bins").size(), 10u);
  EXPECT_EQ(jh["bins"][1]["count"].get<int>(), 2);
  EXPECT_EQ(jh["bins"][9]["closed"], "both");
  EXPECT_EQ(jh["total"].get<int>(), 3);
  EXPECT_NE(format_table(h).find('#'), std::string::npos);
}

}  // namespace
}  // namespace bridge_oa
