// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Binary checkpoint and adapter files, model fingerprints and atomic file
// writes. Both binary formats are little-endian with 32-bit float payloads:
//
//   LBWT: "LBWT" u32 version, u32 n + n bytes of canonical config JSON,
//         u32 count, then per tensor: u32 n + name, u32 rank, u32 dims[rank],
//         f32 payload.
//   LBAD: "LBAD" u32 version, u32 n + n bytes of metadata JSON (rank, alpha,
//         targets, n_layers, fingerprint), u32 count, then per adapter:
//         u32 layer, u8 proj, A tensor, B tensor (rank, dims, payload each).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lb/lora.hpp"

namespace lb {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kAdapterVersion = 1;

// Keys sorted, no whitespace.
std::string canonical_config_json(const ModelConfig& cfg);
ModelConfig config_from_json(std::string_view json);  // throws ConfigError

std::string sha256_hex(std::string_view bytes);

// SHA-256 over the hash of the canonical config JSON followed by the hash of
// every base tensor's payload bytes in for_each order.
std::string model_fingerprint(const BaseWeights& w);

std::string checkpoint_bytes(const BaseWeights& w);
BaseWeights parse_checkpoint(std::string_view bytes);  // throws ParseError
void save_checkpoint(const std::filesystem::path& path, const BaseWeights& w);
BaseWeights load_checkpoint(const std::filesystem::path& path);

std::string adapter_bytes(const LoraSet& set);
LoraSet parse_adapters(std::string_view bytes);  // throws ParseError
void save_adapters(const std::filesystem::path& path, const LoraSet& set);
LoraSet load_adapters(const std::filesystem::path& path);
// Throws CompatibilityError naming both hashes when the file was trained
// against a different base.
LoraSet load_adapters_for(const std::filesystem::path& path, const std::string& base_fingerprint);
void check_fingerprint(const LoraSet& set, const std::string& base_fingerprint);

// Writes to a sibling temporary file, then renames over the target. Throws
// IoError.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);  // throws IoError

}  // namespace lb
