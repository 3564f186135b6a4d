// tests/backends-test.cc

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
#include <thread>

#include <gtest/gtest.h>

#include "bridge_oa/backends.h"
#include "bridge_oa/error.h"
#include "bridge_oa/hash.h"
#include "bridge_oa/synthetic.h"
#include "test-util.h"

// After Eigen: <resolv.h> defines a _res macro that clashes with Eigen names.
#include <httplib.h>
#include <json.hpp>

namespace bridge_oa {
namespace {

namespace fs = std::filesystem;

UtteranceContext ctx_for(const ManifestRecord &r, std::optional<double> omega = {}) {
  return {r.utt_id, omega, &r};
}

TEST(Descriptor, Parsing) {
  auto d = BackendDescriptor::parse(BackendKind::kEnhancer, "builtin:identity");
  EXPECT_EQ(d.mode, BackendMode::kBuiltin);
  EXPECT_EQ(d.id, "builtin:identity");
  d = BackendDescriptor::parse(BackendKind::kRecognizer, "builtin:scripted=/t.tsv", "fake");
  EXPECT_EQ(d.id, "fake");
  EXPECT_EQ(d.table_path, "/t.tsv");
  d = BackendDescriptor::parse(BackendKind::kScorer, "http://127.0.0.1:9/score");
  EXPECT_EQ(d.mode, BackendMode::kHttp);
  d = BackendDescriptor::parse(BackendKind::kEnhancer, "cmd:enh {input_wav} {output_wav}");
  EXPECT_EQ(d.mode, BackendMode::kExternalCommand);

  EXPECT_THROW(BackendDescriptor::parse(BackendKind::kEnhancer, "builtin:nope"),
               InvalidArgument);
  EXPECT_THROW(BackendDescriptor::parse(BackendKind::kRecognizer, "builtin:scripted"),
               InvalidArgument);
  EXPECT_THROW(BackendDescriptor::parse(BackendKind::kScorer, "precomputed"), InvalidArgument);
  EXPECT_THROW(BackendDescriptor::parse(BackendKind::kEnhancer, "cmd:enh {input_wav}"),
               InvalidArgument);
  EXPECT_THROW(BackendDescriptor::parse(BackendKind::kRecognizer, "ftp://x"), InvalidArgument);
}

TEST(Enhancers, IdentityIsBitwise) {
  auto e = make_enhancer(BackendDescriptor::parse(BackendKind::kEnhancer, "builtin:identity"));
  Waveform w = testing::random_waveform(1000, 1);
  ManifestRecord r = testing::record("u", "", "");
  EXPECT_EQ(e->enhance(w, ctx_for(r)).samples, w.samples);
}

TEST(Enhancers, SpectralSubtractionImprovesSnr) {
  SyntheticConfig cfg;
  cfg.num_utterances = 6;
  cfg.min_snr_db = 0.0;
  cfg.max_snr_db = 5.0;
  auto e = make_enhancer(
      BackendDescriptor::parse(BackendKind::kEnhancer, "builtin:spectral-subtraction"));
  for (const auto &u : make_synthetic_corpus(cfg)) {
    ManifestRecord r = testing::record(u.utt_id, "", "");
    Waveform y = e->enhance(u.noisy, ctx_for(r));
    ASSERT_EQ(y.size(), u.noisy.size());
    EXPECT_GT(snr_db(u.clean.samples, y.samples), snr_db(u.clean.samples, u.noisy.samples))
        << u.utt_id;
  }
}

TEST(Enhancers, PrecomputedReadsEnhancedPath) {
  testing::TempDir dir;
  Waveform n = testing::random_waveform(500, 1), y = testing::random_waveform(500, 2);
  save_wav(y, dir.path() / "y.wav");
  auto e = make_enhancer(BackendDescriptor::parse(BackendKind::kEnhancer, "precomputed"));
  ManifestRecord r = testing::record("u", "", "");
  EXPECT_THROW(e->enhance(n, ctx_for(r)), BackendError);
  r.enhanced_path = dir.path() / "y.wav";
  EXPECT_EQ(e->enhance(n, ctx_for(r)).samples, load_wav(dir.path() / "y.wav").samples);
  r.enhanced_path = dir.path() / "missing.wav";
  EXPECT_THROW(e->enhance(n, ctx_for(r)), BackendError);
}

TEST(Recognizers, OracleAndScripted) {
  testing::TempDir dir;
  ManifestRecord r = testing::record("u1", "", "the reference");
  auto oracle =
      make_recognizer(BackendDescriptor::parse(BackendKind::kRecognizer, "builtin:oracle"));
  EXPECT_EQ(oracle->transcribe({}, ctx_for(r)), "the reference");

  std::ofstream(dir.path() / "t.tsv") << "# utt\tomega\ttext\nu1\t1.0\tnoisy words\n"
                                         "u1\t0.3\tbest words\n";
  auto s = make_recognizer(BackendDescriptor::parse(
      BackendKind::kRecognizer, "builtin:scripted=" + (dir.path() / "t.tsv").string()));
  EXPECT_EQ(s->transcribe({}, ctx_for(r, 1.0)), "noisy words");
  EXPECT_EQ(s->transcribe({}, ctx_for(r, 0.30000000000000004)), "best words");
  EXPECT_THROW(s->transcribe({}, ctx_for(r, 0.5)), BackendError);
  EXPECT_THROW(s->transcribe({}, ctx_for(r)), BackendError);
}

TEST(Scorers, SyntheticMapping) {
  MosScore a = synthetic_mos_from_snr(0.0);
  EXPECT_EQ(a.sig, 3.0);
  EXPECT_EQ(a.bak, 3.0);
  EXPECT_EQ(pq_target(a), 0.5);
  MosScore b = synthetic_mos_from_snr(40.0);
  EXPECT_EQ(b.sig, 5.0);
  EXPECT_EQ(b.bak, 5.0);
  MosScore c = synthetic_mos_from_snr(-100.0);
  EXPECT_EQ(c.sig, 1.0);
  EXPECT_EQ(c.bak, 1.0);
  // Monotone in SNR.
  for (double s = -30; s < 50; s += 0.5) {
    EXPECT_LE(pq_target(synthetic_mos_from_snr(s)), pq_target(synthetic_mos_from_snr(s + 0.5)));
  }
}

TEST(Scorers, SyntheticUsesCleanReferenceOrSnr) {
  testing::TempDir dir;
  auto s = make_scorer(BackendDescriptor::parse(BackendKind::kScorer, "builtin:synthetic-snr"));
  Waveform clean = testing::random_waveform(1000, 1);
  save_wav(clean, dir.path() / "c.wav");
  clean = load_wav(dir.path() / "c.wav");
  ManifestRecord r = testing::record("u", "", "");
  EXPECT_THROW(s->score(clean, ctx_for(r)), BackendError);
  r.snr_db = 10.0;
  EXPECT_EQ(s->score(clean, ctx_for(r)).bak, 4.0);
  r.clean_path = dir.path() / "c.wav";
  MosScore m = s->score(clean, ctx_for(r));  // identical signal: infinite SNR
  EXPECT_EQ(m.sig, 5.0);
  EXPECT_EQ(m.bak, 5.0);
}

TEST(Scorers, OutputParsing) {
  MosScore m = parse_scorer_output("model v1\nsig=3.25 bak = 4\n");
  EXPECT_EQ(m.sig, 3.25);
  EXPECT_EQ(m.bak, 4.0);
  EXPECT_THROW(parse_scorer_output("sig=7 bak=2"), InvalidArgument);
  EXPECT_THROW(parse_scorer_output("nothing"), InvalidArgument);
}

TEST(CommandMode, AllKinds) {
  testing::TempDir dir;
  Waveform w = testing::random_waveform(800, 3);
  ManifestRecord r = testing::record("utt 1", "", "");
  auto e = make_enhancer(
      BackendDescriptor::parse(BackendKind::kEnhancer, "cmd:cp {input_wav} {output_wav}"));
  Waveform y = e->enhance(w, ctx_for(r));
  ASSERT_EQ(y.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    ASSERT_LE(std::abs(y.samples[i] - w.samples[i]), 1.0 / 32768.0);

  auto asr = make_recognizer(BackendDescriptor::parse(
      BackendKind::kRecognizer, "cmd:test -s {input_wav} && echo heard {utt_id}"));
  EXPECT_EQ(asr->transcribe(w, ctx_for(r)), "heard utt 1");

  auto mos = make_scorer(
      BackendDescriptor::parse(BackendKind::kScorer, "cmd:echo sig=4.5 bak=2 # {input_wav}"));
  MosScore m = mos->score(w, ctx_for(r));
  EXPECT_EQ(m.sig, 4.5);
  EXPECT_EQ(m.bak, 2.0);

  auto bad = make_scorer(
      BackendDescriptor::parse(BackendKind::kScorer, "cmd:echo sig=7 bak=2 # {input_wav}"));
  EXPECT_THROW(bad->score(w, ctx_for(r)), BackendError);
  auto fails = make_recognizer(BackendDescriptor::parse(
      BackendKind::kRecognizer, "cmd:echo oops >&2; exit 4 # {input_wav}"));
  try {
    fails->transcribe(w, ctx_for(r));
    FAIL() << "expected BackendError";
  } catch (const BackendError &ex) {
    EXPECT_EQ(ex.utt_id(), "utt 1");
    EXPECT_NE(std::string(ex.what()).find("oops"), std::string::npos);
  }
  BackendDescriptor slow =
      BackendDescriptor::parse(BackendKind::kRecognizer, "cmd:sleep 5 # {input_wav}");
  slow.timeout_seconds = 0.3;
  EXPECT_THROW(make_recognizer(slow)->transcribe(w, ctx_for(r)), BackendError);
}

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/enhance", [](const httplib::Request &req, httplib::Response &res) {
      Waveform w = decode_wav(req.body);
      for (double &s : w.samples) s *= 0.5;
      res.set_content(nlohmann::json{{"wav_base64", base64_encode(encode_wav(w))}}.dump(),
                      "application/json");
    });
    server_.Post("/asr", [this](const httplib::Request &req, httplib::Response &res) {
      last_omega_ = req.get_header_value("X-OA-Coefficient");
      res.set_content(
          nlohmann::json{{"text", "id " + req.get_header_value("X-Utterance-Id")}}.dump(),
          "application/json");
    });
    server_.Post("/mos", [](const httplib::Request &, httplib::Response &res) {
      res.set_content(R"({"sig": 2.5, "bak": 3.5})", "application/json");
    });
    server_.Post("/broken", [](const httplib::Request &, httplib::Response &res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string &path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_omega_;
};

TEST_F(HttpFixture, AllKinds) {
  Waveform w = testing::random_waveform(400, 4);
  ManifestRecord r = testing::record("u7", "", "");
  auto e = make_enhancer(BackendDescriptor::parse(BackendKind::kEnhancer, url("/enhance")));
  Waveform y = e->enhance(w, ctx_for(r));
  ASSERT_EQ(y.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    ASSERT_NEAR(y.samples[i], 0.5 * w.samples[i], 2.0 / 32768.0);

  auto asr = make_recognizer(BackendDescriptor::parse(BackendKind::kRecognizer, url("/asr")));
  EXPECT_EQ(asr->transcribe(w, ctx_for(r, 0.25)), "id u7");
  EXPECT_NEAR(std::stod(last_omega_), 0.25, 1e-9);

  auto mos = make_scorer(BackendDescriptor::parse(BackendKind::kScorer, url("/mos")));
  MosScore m = mos->score(w, ctx_for(r));
  EXPECT_EQ(m.sig, 2.5);
  EXPECT_EQ(m.bak, 3.5);

  auto broken = make_scorer(BackendDescriptor::parse(BackendKind::kScorer, url("/broken")));
  EXPECT_THROW(broken->score(w, ctx_for(r)), BackendError);
  auto wrong = make_scorer(BackendDescriptor::parse(BackendKind::kScorer, url("/asr")));
  EXPECT_THROW(wrong->score(w, ctx_for(r)), BackendError);
}

}  // namespace
}  // namespace bridge_oa
