// src/features.cc

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

#include "bridge_oa/features.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "bridge_oa/error.h"
#include "bridge_oa/hash.h"

namespace bridge_oa {

namespace {

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }

// n_mels x (fft_size/2 + 1) triangular weights, spaced uniformly in mel.
Eigen::MatrixXd mel_banks(const FbankConfig &cfg, int sample_rate) {
  const int num_bins = cfg.fft_size / 2 + 1;
  const double nyquist = 0.5 * sample_rate;
  const double high = cfg.mel_high_hz > 0.0 ? cfg.mel_high_hz : nyquist;
  const double mel_low = hz_to_mel(cfg.mel_low_hz);
  const double mel_high = hz_to_mel(high);
  const double delta = (mel_high - mel_low) / (cfg.n_mels + 1);
  Eigen::MatrixXd banks = Eigen::MatrixXd::Zero(cfg.n_mels, num_bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    double left = mel_low + m * delta;
    double center = left + delta;
    double right = center + delta;
    for (int b = 0; b < num_bins; ++b) {
      double mel = hz_to_mel(static_cast<double>(b) * sample_rate / cfg.fft_size);
      if (mel > left && mel < right) {
        banks(m, b) = mel <= center ? (mel - left) / (center - left)
                                    : (right - mel) / (right - center);
      }
    }
  }
  return banks;
}

}  // namespace

int FbankConfig::window_samples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * 1e-3 * sample_rate));
}

int FbankConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate));
}

void FbankConfig::validate(int sample_rate) const {
  if (n_mels < 1) throw InvalidArgument("fbank: n_mels must be >= 1");
  if (!(hop_ms > 0.0 && window_ms > hop_ms))
    throw InvalidArgument("fbank: need window_ms > hop_ms > 0");
  if (fft_size < window_samples(sample_rate))
    throw InvalidArgument("fbank: fft_size " + std::to_string(fft_size) +
                          " smaller than window of " +
                          std::to_string(window_samples(sample_rate)) + " samples");
  if (fft_size & (fft_size - 1))
    throw InvalidArgument("fbank: fft_size must be a power of two");
  double high = mel_high_hz > 0.0 ? mel_high_hz : 0.5 * sample_rate;
  if (!(mel_low_hz >= 0.0 && mel_low_hz < high && high <= 0.5 * sample_rate))
    throw InvalidArgument("fbank: invalid mel band edges");
  if (!(energy_floor > 0.0)) throw InvalidArgument("fbank: energy_floor must be > 0");
}

std::string FbankConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "fbank:" << n_mels << ':' << window_ms << ':' << hop_ms << ':' << fft_size
     << ':' << mel_low_hz << ':' << mel_high_hz << ':' << energy_floor << ':'
     << pre_emphasis << ':' << pre_emphasis_coeff << ':' << mean_normalize;
  return os.str();
}

int num_frames(std::size_t num_samples, int window_samples, int hop_samples) {
  if (num_samples < static_cast<std::size_t>(window_samples)) return 0;
  return static_cast<int>((num_samples - window_samples) / hop_samples) + 1;
}

FeatureMatrix fbank(const Waveform &w, const FbankConfig &cfg) {
  w.validate();
  cfg.validate(w.sample_rate);
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const int frames = num_frames(w.size(), win, hop);
  if (frames < 1)
    throw InvalidArgument("fbank: waveform of " + std::to_string(w.size()) +
                          " samples is shorter than one " + std::to_string(win) +
                          "-sample window");

  const int num_bins = cfg.fft_size / 2 + 1;
  const Eigen::MatrixXd banks = mel_banks(cfg, w.sample_rate);

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (win - 1));

  Eigen::FFT<double> fft;
  std::vector<double> buf(cfg.fft_size);
  std::vector<std::complex<double>> spec;
  Eigen::MatrixXd power(num_bins, frames);

  for (int t = 0; t < frames; ++t) {
    const double *src = w.samples.data() + static_cast<std::size_t>(t) * hop;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < win; ++i) {
      double s = src[i];
      if (cfg.pre_emphasis) s -= cfg.pre_emphasis_coeff * (i > 0 ? src[i - 1] : src[0]);
      buf[i] = s * window[i];
    }
    fft.fwd(spec, buf);
    for (int b = 0; b < num_bins; ++b) power(b, t) = std::norm(spec[b]);
  }

  FeatureMatrix out;
  out.values = (banks * power).array().max(cfg.energy_floor).log().matrix();
  if (cfg.mean_normalize) {
    Eigen::VectorXd mean = out.values.rowwise().mean();
    out.values.colwise() -= mean;
  }
  return out;
}

FeatureMatrix spec_augment(const FeatureMatrix &f, const AugmentPolicy &policy,
                           std::uint64_t seed, std::vector<AppliedMask> *applied) {
  if (policy.max_time_mask_frames < 0 || policy.max_freq_mask_channels < 0 ||
      policy.masks_per_axis < 0)
    throw InvalidArgument("spec_augment: mask bounds must be non-negative");
  FeatureMatrix out = f;
  std::mt19937_64 rng(seed);
  const int frames = f.n_frames();
  const int mels = f.n_mels();
  auto draw = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  for (int m = 0; m < policy.masks_per_axis; ++m) {
    int width = std::min(draw(0, policy.max_time_mask_frames), frames);
    int start = draw(0, frames - width);
    if (width > 0)
      out.values.middleCols(start, width).setConstant(policy.mask_value);
    if (applied) applied->push_back({AppliedMask::Axis::kTime, start, width});
  }
  for (int m = 0; m < policy.masks_per_axis; ++m) {
    int width = std::min(draw(0, policy.max_freq_mask_channels), mels);
    int start = draw(0, mels - width);
    if (width > 0)
      out.values.middleRows(start, width).setConstant(policy.mask_value);
    if (applied) applied->push_back({AppliedMask::Axis::kFrequency, start, width});
  }
  return out;
}

FeatureCache::FeatureCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path FeatureCache::file_for(const std::string &utt_id,
                                             const std::string &config_key) const {
  return dir_ / (short_hash(utt_id + '\n' + config_key, 24) + ".feat");
}

std::optional<FeatureMatrix> FeatureCache::load(const std::string &utt_id,
                                                const std::string &config_key) const {
  std::ifstream is(file_for(utt_id, config_key), std::ios::binary);
  if (!is) return std::nullopt;
  char magic[4];
  std::int32_t rows = 0, cols = 0;
  std::uint32_t crc = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char *>(&rows), sizeof rows);
  is.read(reinterpret_cast<char *>(&cols), sizeof cols);
  if (!is || std::string(magic, 4) != "BOAF" || rows <= 0 || cols <= 0)
    return std::nullopt;
  FeatureMatrix f;
  f.values.resize(rows, cols);
  auto bytes = static_cast<std::streamsize>(sizeof(double) * rows * cols);
  is.read(reinterpret_cast<char *>(f.values.data()), bytes);
  is.read(reinterpret_cast<char *>(&crc), sizeof crc);
  if (!is) return std::nullopt;
  if (crc != crc32({reinterpret_cast<const char *>(f.values.data()),
                    static_cast<std::size_t>(bytes)}))
    return std::nullopt;
  return f;
}

void FeatureCache::store(const std::string &utt_id, const std::string &config_key,
                         const FeatureMatrix &f) const {
  auto path = file_for(utt_id, config_key);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write feature cache " + tmp.string());
    std::int32_t rows = f.n_mels(), cols = f.n_frames();
    auto bytes = sizeof(double) * static_cast<std::size_t>(rows) * cols;
    std::uint32_t crc =
        crc32({reinterpret_cast<const char *>(f.values.data()), bytes});
    os.write("BOAF", 4);
    os.write(reinterpret_cast<const char *>(&rows), sizeof rows);
    os.write(reinterpret_cast<const char *>(&cols), sizeof cols);
    os.write(reinterpret_cast<const char *>(f.values.data()),
             static_cast<std::streamsize>(bytes));
    os.write(reinterpret_cast<const char *>(&crc), sizeof crc);
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace bridge_oa
