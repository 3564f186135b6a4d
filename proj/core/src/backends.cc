// src/backends.cc

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

#include "bridge_oa/backends.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <semaphore>
#include <sstream>
#include <utility>

#include <httplib.h>
#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "bridge_oa/error.h"
#include "bridge_oa/hash.h"
#include "bridge_oa/subprocess.h"

namespace bridge_oa {

namespace fs = std::filesystem;

namespace {

constexpr std::ptrdiff_t kMaxWorkers = 1024;

/// Bounds concurrent calls into one adapter.
class WorkerLimit {
 public:
  explicit WorkerLimit(int n) : sem_(std::clamp<std::ptrdiff_t>(n, 1, kMaxWorkers)) {}
  class Guard {
   public:
    explicit Guard(std::counting_semaphore<kMaxWorkers> &s) : s_(s) { s_.acquire(); }
    ~Guard() { s_.release(); }
    Guard(const Guard &) = delete;
    Guard &operator=(const Guard &) = delete;

   private:
    std::counting_semaphore<kMaxWorkers> &s_;
  };
  Guard acquire() { return Guard(sem_); }

 private:
  std::counting_semaphore<kMaxWorkers> sem_;
};

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string replace_all(std::string s, const std::string &from, const std::string &to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;
       pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

std::string tail(const std::string &s, std::size_t n = 400) {
  return s.size() <= n ? s : "..." + s.substr(s.size() - n);
}

std::string expand_template(const std::string &templ, const UtteranceContext &ctx,
                            const fs::path &input, const fs::path *output) {
  std::string cmd = replace_all(templ, "{input_wav}", shell_quote(input.string()));
  if (output) cmd = replace_all(cmd, "{output_wav}", shell_quote(output->string()));
  return replace_all(cmd, "{utt_id}", shell_quote(ctx.utt_id));
}

ProcessResult run_checked(const BackendDescriptor &d, const std::string &cmd,
                          const UtteranceContext &ctx) {
  ProcessResult r = run_shell(cmd, d.timeout_seconds);
  if (r.timed_out)
    throw BackendError(ctx.utt_id, to_string(d.kind) + " '" + d.id + "' timed out after " +
                                       std::to_string(d.timeout_seconds) + " s");
  if (r.exit_code != 0)
    throw BackendError(ctx.utt_id, to_string(d.kind) + " '" + d.id + "' exited with " +
                                       std::to_string(r.exit_code) + ": " + tail(r.err));
  return r;
}

struct HttpTarget {
  std::string host;  // scheme://host:port
  std::string path;
};

HttpTarget split_url(const std::string &url) {
  static const std::regex kUrl(R"((https?://[^/]+)(/.*)?)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw InvalidArgument("bad URL: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

nlohmann::json post_wav(const BackendDescriptor &d, const Waveform &w,
                        const UtteranceContext &ctx) {
  HttpTarget t = split_url(d.target);
  httplib::Client cli(t.host);
  auto secs = static_cast<time_t>(d.timeout_seconds);
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  httplib::Headers headers = {{"X-Utterance-Id", ctx.utt_id}};
  if (ctx.omega) headers.emplace("X-OA-Coefficient", std::to_string(*ctx.omega));
  auto res = cli.Post(t.path, headers, encode_wav(w), "audio/wav");
  if (!res)
    throw BackendError(ctx.utt_id, to_string(d.kind) + " '" + d.id +
                                       "' request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendError(ctx.utt_id, to_string(d.kind) + " '" + d.id + "' returned HTTP " +
                                       std::to_string(res->status) + ": " + tail(res->body));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception &e) {
    throw BackendError(ctx.utt_id, "malformed JSON from " + d.id + ": " + e.what());
  }
}

// ---- enhancers -----------------------------------------------------------

class IdentityEnhancer : public Enhancer {
 public:
  using Enhancer::Enhancer;
  Waveform enhance(const Waveform &x, const UtteranceContext &) const override { return x; }
};

class SpectralSubtractionEnhancer : public Enhancer {
 public:
  using Enhancer::Enhancer;
  Waveform enhance(const Waveform &x, const UtteranceContext &) const override {
    return spectral_subtraction(x);
  }
};

class PrecomputedEnhancer : public Enhancer {
 public:
  using Enhancer::Enhancer;
  Waveform enhance(const Waveform &x, const UtteranceContext &ctx) const override {
    if (!ctx.record || !ctx.record->enhanced_path)
      throw BackendError(ctx.utt_id, "precomputed enhancer: record has no enhanced_path");
    Waveform y;
    try {
      y = load_wav(*ctx.record->enhanced_path, ctx.record->channel);
    } catch (const Error &e) {
      throw BackendError(ctx.utt_id, e.what());
    }
    if (y.sample_rate != x.sample_rate)
      throw BackendError(ctx.utt_id, "enhanced audio at " + std::to_string(y.sample_rate) +
                                         " Hz, noisy at " + std::to_string(x.sample_rate) +
                                         " Hz");
    return y;
  }
};

class CommandEnhancer : public Enhancer {
 public:
  explicit CommandEnhancer(BackendDescriptor d) : Enhancer(d), limit_(d.max_workers) {}
  Waveform enhance(const Waveform &x, const UtteranceContext &ctx) const override {
    auto guard = limit_.acquire();
    TempDir tmp("bridge-oa-enh");
    fs::path in = tmp.path() / "input.wav", out = tmp.path() / "output.wav";
    save_wav(x, in);
    run_checked(desc_, expand_template(desc_.target, ctx, in, &out), ctx);
    Waveform y;
    try {
      y = load_wav(out);
    } catch (const Error &e) {
      throw BackendError(ctx.utt_id, "enhancer output unreadable: " + std::string(e.what()));
    }
    if (y.sample_rate != x.sample_rate)
      throw BackendError(ctx.utt_id, "enhancer changed the sample rate");
    return y;
  }

 private:
  mutable WorkerLimit limit_;
};

class HttpEnhancer : public Enhancer {
 public:
  explicit HttpEnhancer(BackendDescriptor d) : Enhancer(d), limit_(d.max_workers) {}
  Waveform enhance(const Waveform &x, const UtteranceContext &ctx) const override {
    auto guard = limit_.acquire();
    nlohmann::json j = post_wav(desc_, x, ctx);
    Waveform y;
    try {
      y = decode_wav(base64_decode(j.at("wav_base64").get<std::string>()));
    } catch (const std::exception &e) {
      throw BackendError(ctx.utt_id, "enhancer response unreadable: " + std::string(e.what()));
    }
    if (y.sample_rate != x.sample_rate)
      throw BackendError(ctx.utt_id, "enhancer changed the sample rate");
    return y;
  }

 private:
  mutable WorkerLimit limit_;
};

// ---- recognizers ---------------------------------------------------------

class OracleRecognizer : public Recognizer {
 public:
  using Recognizer::Recognizer;
  std::string transcribe(const Waveform &, const UtteranceContext &ctx) const override {
    if (!ctx.record) throw BackendError(ctx.utt_id, "oracle recognizer needs the record");
    return ctx.record->transcript;
  }
};

class ScriptedRecognizer : public Recognizer {
 public:
  explicit ScriptedRecognizer(BackendDescriptor d) : Recognizer(d), grid_(d.grid_step) {
    std::ifstream is(desc_.table_path);
    if (!is) throw IoError("cannot open recognizer table " + desc_.table_path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto t1 = line.find('\t');
      auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw IoError(desc_.table_path.string() + ":" + std::to_string(lineno) +
                      ": expected <utt_id>\\t<omega>\\t<text>");
      double omega = std::stod(line.substr(t1 + 1, t2 - t1 - 1));
      table_[{line.substr(0, t1), grid_.nearest_descending_index(omega)}] =
          line.substr(t2 + 1);
    }
  }
  std::string transcribe(const Waveform &, const UtteranceContext &ctx) const override {
    if (!ctx.omega)
      throw BackendError(ctx.utt_id, "scripted recognizer needs the OA coefficient");
    auto it = table_.find({ctx.utt_id, grid_.nearest_descending_index(*ctx.omega)});
    if (it == table_.end()) {
      std::ostringstream msg;
      msg << "scripted recognizer has no entry for (" << ctx.utt_id << ", "
          << grid_.descending_at(grid_.nearest_descending_index(*ctx.omega)) << ")";
      throw BackendError(ctx.utt_id, msg.str());
    }
    return it->second;
  }

 private:
  OaGrid grid_;
  std::map<std::pair<std::string, std::size_t>, std::string> table_;
};

class CommandRecognizer : public Recognizer {
 public:
  explicit CommandRecognizer(BackendDescriptor d) : Recognizer(d), limit_(d.max_workers) {}
  std::string transcribe(const Waveform &w, const UtteranceContext &ctx) const override {
    auto guard = limit_.acquire();
    TempDir tmp("bridge-oa-asr");
    fs::path in = tmp.path() / "input.wav";
    save_wav(w, in);
    return trim(run_checked(desc_, expand_template(desc_.target, ctx, in, nullptr), ctx).out);
  }

 private:
  mutable WorkerLimit limit_;
};

class HttpRecognizer : public Recognizer {
 public:
  explicit HttpRecognizer(BackendDescriptor d) : Recognizer(d), limit_(d.max_workers) {}
  std::string transcribe(const Waveform &w, const UtteranceContext &ctx) const override {
    auto guard = limit_.acquire();
    nlohmann::json j = post_wav(desc_, w, ctx);
    if (!j.contains("text") || !j["text"].is_string())
      throw BackendError(ctx.utt_id, "recognizer response lacks \"text\"");
    return j["text"].get<std::string>();
  }

 private:
  mutable WorkerLimit limit_;
};

// ---- scorers -------------------------------------------------------------

class SyntheticScorer : public Scorer {
 public:
  using Scorer::Scorer;
  MosScore score(const Waveform &w, const UtteranceContext &ctx) const override {
    if (!ctx.record)
      throw BackendError(ctx.utt_id, "synthetic scorer needs a clean reference or snr_db");
    double s;
    if (ctx.record->clean_path) {
      Waveform clean = load_wav(*ctx.record->clean_path, ctx.record->channel);
      s = snr_db(clean.samples, w.samples);
    } else if (ctx.record->snr_db) {
      s = *ctx.record->snr_db;
    } else {
      throw BackendError(ctx.utt_id, "synthetic scorer needs clean_path or snr_db");
    }
    return synthetic_mos_from_snr(s);
  }
};

MosScore checked(MosScore m, const UtteranceContext &ctx, const std::string &id) {
  try {
    m.validate();
  } catch (const InvalidArgument &e) {
    throw BackendError(ctx.utt_id, "scorer '" + id + "': " + e.what());
  }
  return m;
}

class CommandScorer : public Scorer {
 public:
  explicit CommandScorer(BackendDescriptor d) : Scorer(d), limit_(d.max_workers) {}
  MosScore score(const Waveform &w, const UtteranceContext &ctx) const override {
    auto guard = limit_.acquire();
    TempDir tmp("bridge-oa-mos");
    fs::path in = tmp.path() / "input.wav";
    save_wav(w, in);
    std::string out =
        run_checked(desc_, expand_template(desc_.target, ctx, in, nullptr), ctx).out;
    try {
      return parse_scorer_output(out);
    } catch (const Error &e) {
      throw BackendError(ctx.utt_id, "scorer '" + desc_.id + "': " + e.what());
    }
  }

 private:
  mutable WorkerLimit limit_;
};

class HttpScorer : public Scorer {
 public:
  explicit HttpScorer(BackendDescriptor d) : Scorer(d), limit_(d.max_workers) {}
  MosScore score(const Waveform &w, const UtteranceContext &ctx) const override {
    auto guard = limit_.acquire();
    nlohmann::json j = post_wav(desc_, w, ctx);
    MosScore m;
    try {
      m = {j.at("sig").get<double>(), j.at("bak").get<double>()};
    } catch (const nlohmann::json::exception &e) {
      throw BackendError(ctx.utt_id, "scorer response malformed: " + std::string(e.what()));
    }
    return checked(m, ctx, desc_.id);
  }

 private:
  mutable WorkerLimit limit_;
};

}  // namespace

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kEnhancer: return "enhancer";
    case BackendKind::kRecognizer: return "recognizer";
    case BackendKind::kScorer: return "scorer";
  }
  return "backend";
}

BackendDescriptor BackendDescriptor::parse(BackendKind kind, const std::string &spec,
                                           const std::string &id) {
  BackendDescriptor d;
  d.kind = kind;
  d.id = id.empty() ? spec : id;
  if (spec.rfind("builtin:", 0) == 0) {
    d.mode = BackendMode::kBuiltin;
    d.target = spec.substr(8);
    if (auto eq = d.target.find('='); eq != std::string::npos) {
      d.table_path = d.target.substr(eq + 1);
      d.target = d.target.substr(0, eq);
    }
  } else if (spec == "precomputed") {
    d.mode = BackendMode::kPrecomputed;
  } else if (spec.rfind("cmd:", 0) == 0) {
    d.mode = BackendMode::kExternalCommand;
    d.target = spec.substr(4);
  } else if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    d.mode = BackendMode::kHttp;
    d.target = spec;
  } else {
    throw InvalidArgument("unrecognised " + to_string(kind) + " descriptor '" + spec + "'");
  }
  d.validate();
  return d;
}

void BackendDescriptor::validate() const {
  if (id.empty()) throw InvalidArgument("backend id must be non-empty");
  switch (mode) {
    case BackendMode::kBuiltin: {
      static const std::map<BackendKind, std::vector<std::string>> kNames = {
          {BackendKind::kEnhancer, {"identity", "spectral-subtraction"}},
          {BackendKind::kRecognizer, {"oracle", "scripted"}},
          {BackendKind::kScorer, {"synthetic-snr"}}};
      const auto &names = kNames.at(kind);
      if (std::find(names.begin(), names.end(), target) == names.end())
        throw InvalidArgument("unknown builtin " + to_string(kind) + " '" + target + "'");
      if (target == "scripted" && table_path.empty())
        throw InvalidArgument("builtin:scripted needs a table: builtin:scripted=<file>");
      break;
    }
    case BackendMode::kPrecomputed:
      if (kind != BackendKind::kEnhancer)
        throw InvalidArgument("precomputed mode applies to enhancers only");
      break;
    case BackendMode::kExternalCommand:
      if (target.empty()) throw InvalidArgument("empty command template");
      if (target.find("{input_wav}") == std::string::npos)
        throw InvalidArgument("command template lacks {input_wav}");
      if (kind == BackendKind::kEnhancer && target.find("{output_wav}") == std::string::npos)
        throw InvalidArgument("enhancer command template lacks {output_wav}");
      break;
    case BackendMode::kHttp:
      if (target.empty()) throw InvalidArgument("empty endpoint URL");
      split_url(target);
      break;
  }
  if (max_workers < 1) throw InvalidArgument("max_workers must be >= 1");
  if (!(timeout_seconds > 0)) throw InvalidArgument("timeout must be positive");
}

std::unique_ptr<Enhancer> make_enhancer(const BackendDescriptor &d) {
  if (d.kind != BackendKind::kEnhancer) throw InvalidArgument("descriptor is not an enhancer");
  d.validate();
  switch (d.mode) {
    case BackendMode::kBuiltin:
      if (d.target == "identity") return std::make_unique<IdentityEnhancer>(d);
      return std::make_unique<SpectralSubtractionEnhancer>(d);
    case BackendMode::kPrecomputed: return std::make_unique<PrecomputedEnhancer>(d);
    case BackendMode::kExternalCommand: return std::make_unique<CommandEnhancer>(d);
    case BackendMode::kHttp: return std::make_unique<HttpEnhancer>(d);
  }
  throw InvalidArgument("unsupported enhancer mode");
}

std::unique_ptr<Recognizer> make_recognizer(const BackendDescriptor &d) {
  if (d.kind != BackendKind::kRecognizer)
    throw InvalidArgument("descriptor is not a recognizer");
  d.validate();
  switch (d.mode) {
    case BackendMode::kBuiltin:
      if (d.target == "oracle") return std::make_unique<OracleRecognizer>(d);
      return std::make_unique<ScriptedRecognizer>(d);
    case BackendMode::kExternalCommand: return std::make_unique<CommandRecognizer>(d);
    case BackendMode::kHttp: return std::make_unique<HttpRecognizer>(d);
    case BackendMode::kPrecomputed: break;
  }
  throw InvalidArgument("unsupported recognizer mode");
}

std::unique_ptr<Scorer> make_scorer(const BackendDescriptor &d) {
  if (d.kind != BackendKind::kScorer) throw InvalidArgument("descriptor is not a scorer");
  d.validate();
  switch (d.mode) {
    case BackendMode::kBuiltin: return std::make_unique<SyntheticScorer>(d);
    case BackendMode::kExternalCommand: return std::make_unique<CommandScorer>(d);
    case BackendMode::kHttp: return std::make_unique<HttpScorer>(d);
    case BackendMode::kPrecomputed: break;
  }
  throw InvalidArgument("unsupported scorer mode");
}

Waveform spectral_subtraction(const Waveform &noisy) {
  noisy.validate();
  constexpr int kFrame = 512;
  constexpr int kHop = 128;
  constexpr double kOverSubtraction = 2.0;
  constexpr double kFloor = 0.02;
  const int n = static_cast<int>(noisy.size());
  const int lead = kFrame - kHop;
  const int noise_len = std::max(kFrame, static_cast<int>(0.1 * noisy.sample_rate));

  std::vector<double> window(kFrame);
  for (int i = 0; i < kFrame; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kFrame);

  std::vector<double> padded(static_cast<std::size_t>(lead + n + kFrame), 0.0);
  std::copy(noisy.samples.begin(), noisy.samples.end(), padded.begin() + lead);
  const int frames = (static_cast<int>(padded.size()) - kFrame) / kHop + 1;

  Eigen::FFT<double> fft;
  std::vector<std::vector<std::complex<double>>> spectra(frames);
  std::vector<double> buf(kFrame);
  for (int f = 0; f < frames; ++f) {
    for (int i = 0; i < kFrame; ++i) buf[i] = padded[f * kHop + i] * window[i];
    fft.fwd(spectra[f], buf);
  }

  // Noise power from frames lying entirely inside the leading noise segment.
  const int bins = kFrame / 2 + 1;
  std::vector<double> noise(bins, 0.0);
  int used = 0;
  const int noise_end = std::min(noise_len, n);
  for (int f = 0; f < frames; ++f) {
    const int start = f * kHop - lead;
    if (start < 0) continue;
    // Always take the first full frame, even for very short signals.
    if (start + kFrame > noise_end && used > 0) break;
    for (int b = 0; b < bins; ++b) noise[b] += std::norm(spectra[f][b]);
    ++used;
  }
  if (used > 0)
    for (double &v : noise) v /= used;

  std::vector<double> out(padded.size(), 0.0), norm(padded.size(), 0.0);
  std::vector<std::complex<double>> full(kFrame);
  std::vector<double> frame_out;
  for (int f = 0; f < frames; ++f) {
    auto &spec = spectra[f];
    for (int b = 0; b < bins; ++b) {
      double p = std::norm(spec[b]);
      double gain = 0.0;
      if (p > 0.0) gain = std::sqrt(std::max(p - kOverSubtraction * noise[b], kFloor * p) / p);
      full[b] = spec[b] * gain;
    }
    for (int b = bins; b < kFrame; ++b) full[b] = std::conj(full[kFrame - b]);
    fft.inv(frame_out, full);
    for (int i = 0; i < kFrame; ++i) {
      out[f * kHop + i] += frame_out[i] * window[i];
      norm[f * kHop + i] += window[i] * window[i];
    }
  }
  Waveform y;
  y.sample_rate = noisy.sample_rate;
  y.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    double w = norm[lead + i];
    y.samples[i] = w > 1e-8 ? out[lead + i] / w : 0.0;
  }
  return y;
}

MosScore synthetic_mos_from_snr(double snr_db) {
  return {std::clamp(3.0 + snr_db / 20.0, 1.0, 5.0),
          std::clamp(3.0 + snr_db / 10.0, 1.0, 5.0)};
}

MosScore parse_scorer_output(const std::string &text) {
  static const std::regex kSig(R"(sig\s*=\s*([-+0-9.eE]+))");
  static const std::regex kBak(R"(bak\s*=\s*([-+0-9.eE]+))");
  std::smatch ms, mb;
  if (!std::regex_search(text, ms, kSig) || !std::regex_search(text, mb, kBak))
    throw InvalidArgument("scorer output lacks \"sig=<f> bak=<f>\": " + tail(text, 120));
  MosScore m{std::stod(ms[1].str()), std::stod(mb[1].str())};
  m.validate();
  return m;
}

}  // namespace bridge_oa
