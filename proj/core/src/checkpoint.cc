// src/checkpoint.cc

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

#include "bridge_oa/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "bridge_oa/error.h"
#include "bridge_oa/hash.h"

namespace bridge_oa {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'B', 'O', 'A', 'C', 'K', 'P', 'T', '1'};
constexpr int kFormatVersion = 1;

nlohmann::json config_to_json(const ModelConfig &c) {
  return {{"conv_channels", c.conv_channels}, {"bottleneck_dim", c.bottleneck_dim},
          {"res2_scale", c.res2_scale},       {"fc_nodes", c.fc_nodes},
          {"logits_dim", c.logits_dim},       {"n_mels", c.n_mels},
          {"frame_kernel", c.frame_kernel},   {"res2_kernel", c.res2_kernel},
          {"res2_dilation", c.res2_dilation}, {"num_blocks", c.num_blocks},
          {"custom_width", c.custom_width}};
}

ModelConfig config_from_json(const nlohmann::json &j) {
  ModelConfig c;
  c.conv_channels = j.at("conv_channels").get<int>();
  c.bottleneck_dim = j.at("bottleneck_dim").get<int>();
  c.res2_scale = j.at("res2_scale").get<int>();
  c.fc_nodes = j.at("fc_nodes").get<int>();
  c.logits_dim = j.at("logits_dim").get<int>();
  c.n_mels = j.at("n_mels").get<int>();
  c.frame_kernel = j.at("frame_kernel").get<int>();
  c.res2_kernel = j.at("res2_kernel").get<int>();
  c.res2_dilation = j.at("res2_dilation").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.custom_width = j.at("custom_width").get<bool>();
  return c;
}

void append_u32(std::string *out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out->append(b, 4);
}

std::uint32_t read_u32_at(const std::string &s, std::size_t pos) {
  std::uint32_t v;
  std::memcpy(&v, s.data() + pos, 4);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path &path, const Parameters &params,
                     const ModelConfig &cfg,
                     const std::map<std::string, std::string> &meta,
                     TensorDtype dtype) {
  check_parameter_shapes(params, cfg);
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["dtype"] = dtype == TensorDtype::kFloat32 ? "f32" : "f64";
  header["config_hash"] = short_hash(cfg.fingerprint());
  header["model_config"] = config_to_json(cfg);
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto &[name, t] : params.entries())
    header["tensors"].push_back({{"name", name}, {"shape", t.shape}});
  const std::string header_text = header.dump();

  std::string blob(kMagic, sizeof kMagic);
  append_u32(&blob, static_cast<std::uint32_t>(header_text.size()));
  blob += header_text;
  for (const auto &[name, t] : params.entries()) {
    for (double v : t.data) {
      if (dtype == TensorDtype::kFloat32) {
        float f = static_cast<float>(v);
        blob.append(reinterpret_cast<const char *>(&f), sizeof f);
      } else {
        blob.append(reinterpret_cast<const char *>(&v), sizeof v);
      }
    }
  }
  append_u32(&blob, crc32(blob));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint " + tmp.string());
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path,
                           const std::optional<ModelConfig> &expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::string blob((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < sizeof kMagic + 8 ||
      std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    if (blob.size() >= sizeof kMagic &&
        std::memcmp(blob.data(), kMagic, sizeof kMagic) == 0)
      throw ChecksumError(path.string() + ": truncated checkpoint");
    throw IoError(path.string() + ": not a bridge-oa checkpoint");
  }
  const std::size_t body = blob.size() - 4;
  if (read_u32_at(blob, body) != crc32(std::string_view(blob).substr(0, body)))
    throw ChecksumError(path.string() + ": checksum mismatch (corrupt or truncated)");

  const std::uint32_t header_len = read_u32_at(blob, sizeof kMagic);
  std::size_t pos = sizeof kMagic + 4;
  if (pos + header_len > body) throw ChecksumError(path.string() + ": bad header length");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(pos, header_len));
  } catch (const nlohmann::json::exception &e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  pos += header_len;

  Checkpoint ck;
  ck.config = config_from_json(header.at("model_config"));
  ck.meta = header.at("meta").get<std::map<std::string, std::string>>();
  ck.dtype = header.at("dtype").get<std::string>() == "f64" ? TensorDtype::kFloat64
                                                           : TensorDtype::kFloat32;
  if (expected) {
    if (expected->logits_dim != ck.config.logits_dim)
      throw ShapeError(path.string() + ": checkpoint logits_dim " +
                       std::to_string(ck.config.logits_dim) + " != expected " +
                       std::to_string(expected->logits_dim));
    if (expected->fingerprint() != ck.config.fingerprint())
      throw ShapeError(path.string() + ": checkpoint config " +
                       ck.config.fingerprint() + " != expected " +
                       expected->fingerprint());
  }

  const std::size_t width = ck.dtype == TensorDtype::kFloat32 ? 4 : 8;
  for (const auto &entry : header.at("tensors")) {
    Tensor &t = ck.params.add(entry.at("name").get<std::string>(),
                              entry.at("shape").get<std::vector<int>>());
    if (pos + t.numel() * width > body)
      throw ChecksumError(path.string() + ": payload shorter than header");
    for (double &v : t.data) {
      if (width == 4) {
        float f;
        std::memcpy(&f, blob.data() + pos, 4);
        v = f;
      } else {
        std::memcpy(&v, blob.data() + pos, 8);
      }
      pos += width;
    }
  }
  if (pos != body) throw ChecksumError(path.string() + ": trailing bytes in payload");
  check_parameter_shapes(ck.params, ck.config);
  return ck;
}

}  // namespace bridge_oa
