// bridge_oa/checkpoint.h

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

#ifndef BRIDGE_OA_CHECKPOINT_H_
#define BRIDGE_OA_CHECKPOINT_H_

// Checkpoint container (all integers little-endian):
//
//   bytes 0..7    magic "BOACKPT1"
//   u32           header length H
//   H bytes       JSON header: {"format_version", "dtype" ("f32"|"f64"),
//                 "config_hash", "model_config", "meta", "tensors":
//                 [{"name", "shape"}...]}
//   payload       every tensor in header order, row-major, dtype-sized
//   u32           CRC-32 of all preceding bytes

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "bridge_oa/nnet.h"

namespace bridge_oa {

enum class TensorDtype { kFloat32, kFloat64 };

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  std::map<std::string, std::string> meta;
  TensorDtype dtype = TensorDtype::kFloat32;
};

/// Float32 storage rounds each value to the nearest float; use kFloat64 for a
/// bit-exact copy of double parameters.
void save_checkpoint(const std::filesystem::path &path, const Parameters &params,
                     const ModelConfig &cfg,
                     const std::map<std::string, std::string> &meta = {},
                     TensorDtype dtype = TensorDtype::kFloat32);

/// Throws ChecksumError on corruption, ShapeError when `expected` is given and
/// disagrees with the stored configuration or tensor shapes.
Checkpoint load_checkpoint(const std::filesystem::path &path,
                           const std::optional<ModelConfig> &expected = std::nullopt);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_CHECKPOINT_H_
