// src/audio.cc

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

#include "bridge_oa/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "bridge_oa/error.h"

namespace bridge_oa {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const char *p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24;
}

std::uint16_t read_u16(const char *p) {
  return static_cast<std::uint16_t>(
      static_cast<unsigned char>(p[0]) |
      static_cast<unsigned char>(p[1]) << 8);
}

void put_u32(std::string *out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string *out, std::uint16_t v) {
  out->push_back(static_cast<char>(v & 0xFF));
  out->push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

void Waveform::validate() const {
  if (sample_rate <= 0)
    throw InvalidArgument("waveform sample rate must be positive, got " +
                          std::to_string(sample_rate));
  for (double s : samples)
    if (!std::isfinite(s)) throw InvalidArgument("waveform has non-finite samples");
}

Waveform decode_wav(std::string_view bytes, std::optional<int> channel) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" ||
      bytes.substr(8, 4) != "WAVE")
    throw IoError("not a RIFF/WAVE stream");

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::string_view data;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::string_view id = bytes.substr(pos, 4);
    std::uint32_t len = read_u32(bytes.data() + pos + 4);
    std::size_t body = pos + 8;
    std::size_t avail = bytes.size() - body;
    if (id == "fmt ") {
      if (len < 16 || avail < 16) throw IoError("truncated fmt chunk");
      const char *p = bytes.data() + body;
      format = read_u16(p);
      num_channels = read_u16(p + 2);
      rate = read_u32(p + 4);
      bits = read_u16(p + 14);
      if (format == kFormatExtensible) {
        if (len < 40 || avail < 40) throw IoError("truncated extensible fmt chunk");
        format = read_u16(p + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      // Some writers leave the data size unset when streaming.
      data = bytes.substr(body, std::min<std::size_t>(len, avail));
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw IoError("missing fmt chunk");
  if (data.data() == nullptr) throw IoError("missing data chunk");
  if (num_channels == 0) throw IoError("zero channels");

  bool pcm16 = format == kFormatPcm && bits == 16;
  bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw IoError("unsupported WAV encoding (format " + std::to_string(format) +
                  ", " + std::to_string(bits) + " bits); expected 16-bit PCM "
                  "or 32-bit float");

  int ch = 0;
  if (channel.has_value()) {
    ch = *channel;
    if (ch < 0 || ch >= num_channels)
      throw InvalidArgument("requested channel " + std::to_string(ch) +
                            " absent; stream has " +
                            std::to_string(num_channels) + " channel(s)");
  } else if (num_channels != 1) {
    throw InvalidArgument("stream has " + std::to_string(num_channels) +
                          " channels; a channel index is required");
  }

  std::size_t width = bits / 8;
  std::size_t frame = width * num_channels;
  std::size_t n = data.size() / frame;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char *p = data.data() + i * frame + ch * width;
    if (pcm16) {
      auto v = static_cast<std::int16_t>(read_u16(p));
      w.samples[i] = v / 32768.0;
    } else {
      std::uint32_t u = read_u32(p);
      float f;
      std::memcpy(&f, &u, sizeof f);
      w.samples[i] = f;
    }
  }
  if (w.sample_rate <= 0) throw IoError("invalid sample rate in WAV header");
  return w;
}

Waveform load_wav(const std::filesystem::path &path, std::optional<int> channel) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes, channel);
  } catch (const IoError &e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const InvalidArgument &e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string encode_wav(const Waveform &w) {
  w.validate();
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(&out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(&out, 16);
  put_u16(&out, kFormatPcm);
  put_u16(&out, 1);
  put_u32(&out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(&out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(&out, 2);
  put_u16(&out, 16);
  out += "data";
  put_u32(&out, data_bytes);
  for (double s : w.samples) {
    double q = std::round(s * 32768.0);
    q = std::clamp(q, -32768.0, 32767.0);
    put_u16(&out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void save_wav(const Waveform &w, const std::filesystem::path &path) {
  std::string bytes = encode_wav(w);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

std::pair<Waveform, Waveform> align_pair(const Waveform &noisy,
                                         const Waveform &enhanced,
                                         double tolerance_seconds) {
  if (noisy.sample_rate != enhanced.sample_rate)
    throw InvalidArgument("sample rate mismatch: noisy " +
                          std::to_string(noisy.sample_rate) + " Hz vs enhanced " +
                          std::to_string(enhanced.sample_rate) + " Hz");
  std::size_t a = noisy.size(), b = enhanced.size();
  std::size_t diff = a > b ? a - b : b - a;
  double diff_s = static_cast<double>(diff) / noisy.sample_rate;
  if (diff_s > tolerance_seconds) {
    std::ostringstream msg;
    msg << "length mismatch of " << diff_s << " s exceeds tolerance "
        << tolerance_seconds << " s (noisy " << a << " samples, enhanced " << b
        << ")";
    throw InvalidArgument(msg.str());
  }
  std::size_t n = std::min(a, b);
  Waveform x{{noisy.samples.begin(), noisy.samples.begin() + n}, noisy.sample_rate};
  Waveform y{{enhanced.samples.begin(), enhanced.samples.begin() + n},
             enhanced.sample_rate};
  return {std::move(x), std::move(y)};
}

Waveform oa_blend(const Waveform &noisy, const Waveform &enhanced, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0))
    throw InvalidArgument("OA coefficient must lie in [0, 1], got " +
                          std::to_string(omega));
  if (noisy.sample_rate != enhanced.sample_rate)
    throw InvalidArgument("oa_blend: sample rate mismatch");
  if (noisy.size() != enhanced.size())
    throw InvalidArgument("oa_blend: length mismatch (" +
                          std::to_string(noisy.size()) + " vs " +
                          std::to_string(enhanced.size()) + "); align first");
  // The endpoints are returned as copies so that they hold bitwise.
  if (omega == 1.0) return noisy;
  if (omega == 0.0) return enhanced;
  Waveform out;
  out.sample_rate = noisy.sample_rate;
  out.samples.resize(noisy.size());
  const double rest = 1.0 - omega;
  for (std::size_t i = 0; i < noisy.size(); ++i)
    out.samples[i] = omega * noisy.samples[i] + rest * enhanced.samples[i];
  return out;
}

OaGrid::OaGrid(double k) : step_(k) {
  if (!(k > 0.0 && k <= 0.1))
    throw InvalidArgument("OA step k must lie in (0, 0.1], got " + std::to_string(k));
  double inv = 1.0 / k;
  double steps = std::round(inv);
  if (std::abs(inv - steps) > 1e-9)
    throw InvalidArgument("1/k must be integral, got 1/" + std::to_string(k) +
                          " = " + std::to_string(inv));
  auto n = static_cast<std::size_t>(steps);
  coefficients_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    coefficients_[i] = static_cast<double>(i) / static_cast<double>(n);
}

std::vector<double> OaGrid::descending() const {
  return {coefficients_.rbegin(), coefficients_.rend()};
}

std::size_t OaGrid::nearest_descending_index(double omega) const {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  // Walking from omega = 1 downwards keeps the larger coefficient on ties.
  for (std::size_t i = 0; i < size(); ++i) {
    double d = std::abs(descending_at(i) - omega);
    if (d < best_dist - 1e-12) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

std::string OaGrid::fingerprint() const {
  std::ostringstream os;
  os << "oa-grid:" << size() - 1;
  return os.str();
}

double snr_db(std::span<const double> reference, std::span<const double> estimate) {
  std::size_t n = std::min(reference.size(), estimate.size());
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sig += reference[i] * reference[i];
    double e = reference[i] - estimate[i];
    err += e * e;
  }
  if (err <= 0.0) return std::numeric_limits<double>::infinity();
  if (sig <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

}  // namespace bridge_oa
