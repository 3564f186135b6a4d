// bridge_oa/hash.h

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

#ifndef BRIDGE_OA_HASH_H_
#define BRIDGE_OA_HASH_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace bridge_oa {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// First `n` hex characters of sha256_hex; used for short cache keys.
std::string short_hash(std::string_view data, std::size_t n = 16);

/// Standard base64 (RFC 4648) with padding.
std::string base64_encode(std::string_view data);
/// Throws InvalidArgument on malformed input.
std::string base64_decode(std::string_view text);

/// zlib CRC-32.
std::uint32_t crc32(std::string_view data);

}  // namespace bridge_oa

#endif  // BRIDGE_OA_HASH_H_
