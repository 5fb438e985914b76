// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <filesystem>
#include <fstream>
#include <string_view>

/* Private: crash-safe file writes. A half-written artifact must never be
 * observable under its final name, so everything durable goes through a
 * temp file in the same directory plus a rename. */
namespace comuse::detail {

class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path target);
  ~AtomicFile(); /* discards the temp file when commit() never ran */

  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::ofstream& stream() noexcept { return stream_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream stream_;
  bool committed_ = false;
};

void atomic_write_text(const std::filesystem::path& target,
                       std::string_view content);

}  // namespace comuse::detail
