// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "fsutil.hpp"

#include <atomic>
#include <string>

#include "comuse/errors.hpp"

namespace comuse::detail {

namespace {
std::string unique_suffix() {
  static std::atomic<unsigned long long> counter{0};
  return std::to_string(counter.fetch_add(1));
}
}  // namespace

AtomicFile::AtomicFile(std::filesystem::path target)
    : target_(std::move(target)) {
  temp_ = target_;
  temp_ += ".tmp-" + unique_suffix();
  stream_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!stream_) {
    throw IoError("cannot open for writing: " + temp_.string());
  }
}

AtomicFile::~AtomicFile() {
  if (!committed_) {
    stream_.close();
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::commit() {
  stream_.flush();
  if (!stream_) {
    throw IoError("write failed: " + temp_.string());
  }
  stream_.close();
  std::error_code ec;
  std::filesystem::rename(temp_, target_, ec);
  if (ec) {
    std::filesystem::remove(temp_, ec);
    throw IoError("cannot move " + temp_.string() + " to " + target_.string());
  }
  committed_ = true;
}

void atomic_write_text(const std::filesystem::path& target,
                       std::string_view content) {
  AtomicFile file(target);
  file.stream().write(content.data(),
                      static_cast<std::streamsize>(content.size()));
  file.commit();
}

}  // namespace comuse::detail
