// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace comuse {

enum class Label : std::uint8_t { Useful, NotUseful };
enum class DataSource : std::uint8_t { Original, LlmCollected, ExtraGenerated };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(DataSource source) noexcept;

/* Accepts the canonical spellings case-insensitively, with surrounding
 * whitespace trimmed and internal runs collapsed ("  Not   USEFUL " is
 * fine). Returns nullopt for anything else. */
std::optional<Label> parse_label_text(std::string_view text);
std::optional<DataSource> parse_source_text(std::string_view text);

/* One classified unit: a comment and the code it annotates. */
struct CodeCommentPair {
  std::string id;
  std::string comment;       /* non-empty after trimming */
  std::string code_context;  /* may be empty */
  Label label = Label::Useful;
  DataSource source = DataSource::Original;

  bool operator==(const CodeCommentPair&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<CodeCommentPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool operator==(const Dataset&) const = default;
};

struct ClassCounts {
  std::size_t useful = 0;
  std::size_t not_useful = 0;

  std::size_t total() const noexcept { return useful + not_useful; }
  bool operator==(const ClassCounts&) const = default;
};

ClassCounts class_counts(const Dataset& dataset) noexcept;

/* Checks the Dataset invariants: unique ids, comments non-empty after
 * trimming. Throws SchemaError on the first violation. */
void validate(const Dataset& dataset);

/* Exact fraction. Split sizes are defined as floor(fraction * count) and a
 * double like 0.3 would misround counts such as 3/10 of 10, so fractions
 * stay rational end to end. */
struct Ratio {
  std::uint64_t num = 1;
  std::uint64_t den = 5;

  /* floor(num * count / den); count is bounded by dataset sizes so the
   * product fits comfortably in 64 bits. */
  std::size_t scaled_floor(std::size_t count) const noexcept {
    return static_cast<std::size_t>(num * static_cast<std::uint64_t>(count) /
                                    den);
  }
  double value() const noexcept {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  bool zero() const noexcept { return num == 0; }

  /* Parses "1/5" or a plain decimal like "0.2" (which becomes 2/10).
   * Throws ConfigError when the text is not a fraction in [0, 1). */
  static Ratio parse(std::string_view text);
  std::string str() const;

  bool operator==(const Ratio&) const = default;
};

/* Reads a dataset from CSV. The header must name columns `comment`,
 * `code_context` and `label`; `id` and `source` are optional (missing ids
 * become the 1-based data row number, missing sources become `original`).
 * Quoting follows RFC 4180: fields containing commas, quotes or newlines
 * are double-quoted, embedded quotes are doubled.
 *
 * Throws SchemaError (missing column, duplicate id), RowError (bad label,
 * bad source, empty comment, short row) or EmptyDatasetError. */
Dataset load_csv(const std::filesystem::path& path);

/* Writes the five-column CSV described above. Always emits the header and
 * all five columns. */
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct SplitPair {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  Ratio test_fraction;
};

/* Splits per class: exactly floor(test_fraction * class_size) members of
 * each class go to the test side, chosen by a seeded shuffle. Order within
 * each side follows the input. Deterministic across platforms for a given
 * seed. Throws StratifyError if a class is empty while test_fraction > 0. */
SplitPair stratified_split(const Dataset& dataset, Ratio test_fraction,
                           std::uint64_t seed);

/* Concatenates parts in the order given. Ids are qualified as
 * "<part-name>/<id>" so that equal ids from different parts stay distinct. */
Dataset combine(const std::vector<Dataset>& parts, const std::string& name);

/* JSON sidecar recording the seed, the fraction and the test ids, enough
 * to audit or re-apply a split. */
void write_split_manifest(const SplitPair& split,
                          const std::filesystem::path& path);

}  // namespace comuse
