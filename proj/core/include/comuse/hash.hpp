// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace comuse {

inline constexpr std::uint64_t kFnv64Offset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnv64Prime = 0x100000001b3ULL;

/* FNV-1a, 64 bit. Used for token hashes, cache keys and file checksums.
 * Pass the previous return value as `state` to hash data in chunks. */
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t state = kFnv64Offset) noexcept {
  for (unsigned char c : data) {
    state ^= c;
    state *= kFnv64Prime;
  }
  return state;
}

std::uint64_t fnv1a64_bytes(const void* data, std::size_t size,
                            std::uint64_t state = kFnv64Offset) noexcept;

/* Streams a file through FNV-1a. Throws IoError if it cannot be read. */
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

/* 16 lowercase hex digits, zero padded. */
std::string hex64(std::uint64_t value);

/* SHA-256 as 64 lowercase hex digits. Used for response cache file names,
 * where collisions between distinct prompts must be out of the question. */
std::string sha256_hex(std::string_view data);

}  // namespace comuse
