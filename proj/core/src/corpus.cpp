// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "comuse/errors.hpp"
#include "comuse/rng.hpp"
#include "fsutil.hpp"

namespace comuse {

namespace {

std::string trim(std::string_view text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

/* Lowercases and collapses internal whitespace runs to single spaces, so
 * "  Not   USEFUL " compares equal to "not useful". */
std::string normalize_token(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

/* RFC 4180 reader. Returns one vector of fields per record; quoted fields
 * may hold commas, quotes (doubled) and newlines. Accepts LF, CRLF and a
 * lone CR as record ends. Fully blank records are dropped. */
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false; /* quote opening is only special up front */

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c); /* stray quote mid-field: keep it literal */
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (!field.empty() || !record.empty() || field_started) end_record();
  return records;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(Label label) noexcept {
  return label == Label::Useful ? "Useful" : "Not Useful";
}

std::string_view to_string(DataSource source) noexcept {
  switch (source) {
    case DataSource::LlmCollected: return "llm_collected";
    case DataSource::ExtraGenerated: return "extra_generated";
    case DataSource::Original: break;
  }
  return "original";
}

std::optional<Label> parse_label_text(std::string_view text) {
  const std::string token = normalize_token(text);
  if (token == "useful") return Label::Useful;
  if (token == "not useful") return Label::NotUseful;
  return std::nullopt;
}

std::optional<DataSource> parse_source_text(std::string_view text) {
  const std::string token = normalize_token(text);
  if (token == "original") return DataSource::Original;
  if (token == "llm_collected") return DataSource::LlmCollected;
  if (token == "extra_generated") return DataSource::ExtraGenerated;
  return std::nullopt;
}

ClassCounts class_counts(const Dataset& dataset) noexcept {
  ClassCounts counts;
  for (const auto& pair : dataset.pairs) {
    if (pair.label == Label::Useful) ++counts.useful;
    else ++counts.not_useful;
  }
  return counts;
}

void validate(const Dataset& dataset) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(dataset.size());
  for (const auto& pair : dataset.pairs) {
    if (!ids.insert(pair.id).second) {
      throw SchemaError("duplicate id '" + pair.id + "' in dataset '" +
                        dataset.name + "'");
    }
    if (trim(pair.comment).empty()) {
      throw SchemaError("pair '" + pair.id + "' has a blank comment");
    }
  }
}

Ratio Ratio::parse(std::string_view text) {
  const std::string token = trim(text);
  auto fail = [&]() -> ConfigError {
    return ConfigError("not a fraction in [0, 1): '" + token + "'");
  };
  if (token.empty()) throw fail();

  std::uint64_t num = 0, den = 1;
  const auto slash = token.find('/');
  const auto dot = token.find('.');
  auto parse_u64 = [&](std::string_view digits, std::uint64_t& out) {
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(), [](char c) {
          return c >= '0' && c <= '9';
        })) {
      throw fail();
    }
    const auto result =
        std::from_chars(digits.data(), digits.data() + digits.size(), out);
    if (result.ec != std::errc{} || result.ptr != digits.data() + digits.size()) {
      throw fail();
    }
  };

  if (slash != std::string::npos) {
    parse_u64(std::string_view(token).substr(0, slash), num);
    parse_u64(std::string_view(token).substr(slash + 1), den);
  } else if (dot != std::string::npos) {
    std::uint64_t whole = 0;
    parse_u64(std::string_view(token).substr(0, dot), whole);
    const auto digits = std::string_view(token).substr(dot + 1);
    if (digits.empty() || digits.size() > 9) throw fail();
    parse_u64(digits, num);
    den = 1;
    for (std::size_t i = 0; i < digits.size(); ++i) den *= 10;
    num += whole * den;
  } else {
    parse_u64(token, num);
    den = 1;
  }
  if (den == 0) throw fail();
  if (num >= den && num != 0) throw fail(); /* must stay below 1 */
  return Ratio{num, den};
}

std::string Ratio::str() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());

  const auto records = parse_csv(buffer.str());
  if (records.empty()) {
    throw EmptyDatasetError("no header in " + path.string());
  }

  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < records[0].size(); ++i) {
    const std::string name = normalize_token(records[0][i]);
    if (columns.count(name)) {
      throw SchemaError("duplicate column '" + name + "' in " + path.string());
    }
    columns[name] = i;
  }
  auto required = [&](const char* name) {
    const auto it = columns.find(name);
    if (it == columns.end()) {
      throw SchemaError("missing column '" + std::string(name) + "' in " +
                        path.string());
    }
    return it->second;
  };
  const std::size_t comment_col = required("comment");
  const std::size_t code_col = required("code_context");
  const std::size_t label_col = required("label");
  const auto id_col = columns.find("id");
  const auto source_col = columns.find("source");
  const std::size_t width = records[0].size();

  if (records.size() == 1) {
    throw EmptyDatasetError("no data rows in " + path.string());
  }

  Dataset dataset;
  dataset.name = path.stem().string();
  dataset.pairs.reserve(records.size() - 1);
  std::unordered_set<std::string> ids;

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    const std::size_t file_row = r + 1; /* header is row 1 */
    if (row.size() != width) {
      throw RowError("expected " + std::to_string(width) + " fields, got " +
                         std::to_string(row.size()),
                     file_row);
    }
    CodeCommentPair pair;
    pair.comment = row[comment_col];
    pair.code_context = row[code_col];
    if (trim(pair.comment).empty()) {
      throw RowError("comment is empty after trimming", file_row);
    }
    const auto label = parse_label_text(row[label_col]);
    if (!label) {
      throw RowError("unparseable label '" + row[label_col] + "'", file_row);
    }
    pair.label = *label;
    if (source_col != columns.end()) {
      const auto source = parse_source_text(row[source_col->second]);
      if (!source) {
        throw RowError("unparseable source '" + row[source_col->second] + "'",
                       file_row);
      }
      pair.source = *source;
    }
    pair.id = id_col != columns.end() ? row[id_col->second]
                                      : std::to_string(r);
    if (pair.id.empty()) throw RowError("empty id", file_row);
    if (!ids.insert(pair.id).second) {
      throw SchemaError("duplicate id '" + pair.id + "' in " + path.string());
    }
    dataset.pairs.push_back(std::move(pair));
  }
  return dataset;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset: " + path.string());
  out << "id,comment,code_context,label,source\n";
  for (const auto& pair : dataset.pairs) {
    out << csv_quote(pair.id) << ',' << csv_quote(pair.comment) << ','
        << csv_quote(pair.code_context) << ',' << to_string(pair.label) << ','
        << to_string(pair.source) << '\n';
  }
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

SplitPair stratified_split(const Dataset& dataset, Ratio test_fraction,
                           std::uint64_t seed) {
  if (test_fraction.den == 0 ||
      (test_fraction.num != 0 && test_fraction.num >= test_fraction.den)) {
    throw InvalidArgument("test_fraction must lie in [0, 1)");
  }

  std::vector<std::size_t> useful_idx, not_useful_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset.pairs[i].label == Label::Useful ? useful_idx : not_useful_idx)
        .push_back(i);
  }
  if (!test_fraction.zero() && (useful_idx.empty() || not_useful_idx.empty())) {
    const char* which = useful_idx.empty() ? "Useful" : "Not Useful";
    throw StratifyError(std::string("class '") + which + "' is empty in '" +
                        dataset.name + "' but test_fraction > 0");
  }

  std::vector<bool> to_test(dataset.size(), false);
  /* One independent stream per class, both derived from the caller's
   * seed: adding pairs of one class never reshuffles the other. */
  for (auto* indices : {&useful_idx, &not_useful_idx}) {
    if (indices->empty()) continue;
    const bool is_useful = indices == &useful_idx;
    SplitMix64 rng(derive_stream(seed, is_useful ? "split-useful"
                                                 : "split-not-useful"));
    std::vector<std::size_t> pool = *indices;
    shuffle(pool, rng);
    const std::size_t take = test_fraction.scaled_floor(indices->size());
    for (std::size_t i = 0; i < take; ++i) to_test[pool[i]] = true;
  }

  SplitPair split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  split.train.name = dataset.name + "/train";
  split.test.name = dataset.name + "/test";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (to_test[i] ? split.test : split.train).pairs.push_back(dataset.pairs[i]);
  }
  return split;
}

Dataset combine(const std::vector<Dataset>& parts, const std::string& name) {
  if (parts.empty()) {
    throw InvalidArgument("combine needs at least one part");
  }
  Dataset out;
  out.name = name;
  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  out.pairs.reserve(total);
  for (const auto& part : parts) {
    for (const auto& pair : part.pairs) {
      CodeCommentPair qualified = pair;
      qualified.id = part.name + "/" + pair.id;
      out.pairs.push_back(std::move(qualified));
    }
  }
  return out;
}

void write_split_manifest(const SplitPair& split,
                          const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["train_name"] = split.train.name;
  doc["test_name"] = split.test.name;
  doc["seed"] = split.seed;
  doc["test_fraction"] = split.test_fraction.str();
  doc["train_size"] = split.train.size();
  doc["test_size"] = split.test.size();
  auto& ids = doc["test_ids"] = nlohmann::json::array();
  for (const auto& pair : split.test.pairs) ids.push_back(pair.id);
  detail::atomic_write_text(path, doc.dump(2) + "\n");
}

}  // namespace comuse
