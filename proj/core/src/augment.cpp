// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "comuse/errors.hpp"
#include "comuse/rng.hpp"

namespace comuse {

namespace {

std::int64_t now_unix_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string trim_copy(std::string_view text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end &&
         std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return std::string(text.substr(begin, end - begin));
}

std::string lower_copy(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

/* Run `work(i)` for i in [0, count) on up to `parallelism` threads. Each
 * call is preceded by limiter.acquire(). Exceptions must be handled inside
 * `work`. */
void parallel_for(std::size_t count, unsigned parallelism,
                  RateLimiter& limiter,
                  const std::function<void(std::size_t)>& work) {
  if (count == 0) return;
  if (parallelism <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      limiter.acquire();
      work(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  const unsigned worker_count =
      static_cast<unsigned>(std::min<std::size_t>(parallelism, count));
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (unsigned w = 0; w < worker_count; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        limiter.acquire();
        work(i);
      }
    });
  }
  for (auto& worker : workers) worker.join();
}

}  // namespace

// --- prompts ---

std::string PromptTemplate::render(std::string_view comment,
                                   std::string_view code) const {
  static constexpr std::string_view kComment = "{comment}";
  static constexpr std::string_view kCode = "{code}";
  std::string out;
  out.reserve(text.size() + comment.size() + code.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text.compare(pos, kComment.size(), kComment) == 0) {
      out.append(comment);
      pos += kComment.size();
    } else if (text.compare(pos, kCode.size(), kCode) == 0) {
      out.append(code);
      pos += kCode.size();
    } else {
      out.push_back(text[pos]);
      ++pos;
    }
  }
  return out;
}

PromptLibrary PromptLibrary::defaults() {
  PromptLibrary lib;
  lib.label_query.name = "label_query";
  lib.label_query.text =
      "You review source code comments.\n"
      "\n"
      "Code:\n"
      "{code}\n"
      "\n"
      "Comment:\n"
      "{comment}\n"
      "\n"
      "Is this comment useful to a reader of the code? Answer with exactly "
      "one of: Useful or Not Useful.";
  lib.comment_generation.name = "comment_generation";
  lib.comment_generation.text =
      "You document source code.\n"
      "\n"
      "Code:\n"
      "{code}\n"
      "\n"
      "Write one concise comment that would help a reader of this code. "
      "Answer with the comment text only.";
  return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open prompt file: " + path.string());
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& error) {
    throw ConfigError("prompt file " + path.string() +
                      " is not valid JSON: " + error.what());
  }
  PromptLibrary lib;
  for (auto* slot : {&lib.label_query, &lib.comment_generation}) {
    const std::string key =
        slot == &lib.label_query ? "label_query" : "comment_generation";
    if (!parsed.contains(key) || !parsed[key].is_string()) {
      throw ConfigError("prompt file " + path.string() +
                        " lacks a string entry \"" + key + "\"");
    }
    slot->name = key;
    slot->text = parsed[key].get<std::string>();
  }
  if (lib.label_query.text.find("{comment}") == std::string::npos ||
      lib.label_query.text.find("{code}") == std::string::npos) {
    throw ConfigError("label_query prompt must use {comment} and {code}");
  }
  if (lib.comment_generation.text.find("{code}") == std::string::npos) {
    throw ConfigError("comment_generation prompt must use {code}");
  }
  return lib;
}

// --- provenance ---

std::string_view to_string(AugmentOp op) noexcept {
  switch (op) {
    case AugmentOp::Deranged: return "deranged";
    case AugmentOp::LlmLabeled: return "llm_labeled";
    case AugmentOp::LlmGenerated: return "llm_generated";
  }
  return "deranged";
}

namespace {

std::optional<AugmentOp> parse_op(std::string_view text) {
  if (text == "deranged") return AugmentOp::Deranged;
  if (text == "llm_labeled") return AugmentOp::LlmLabeled;
  if (text == "llm_generated") return AugmentOp::LlmGenerated;
  return std::nullopt;
}

nlohmann::json record_to_json(const AugmentationRecord& record) {
  nlohmann::json line;
  line["pair_id"] = record.pair_id;
  line["op"] = std::string(to_string(record.op));
  line["prompt_sha256"] = record.prompt_sha256;
  line["raw_response"] = record.raw_response;
  line["created_unix_ms"] = record.created_unix_ms;
  return line;
}

}  // namespace

ProvenanceLog::ProvenanceLog(std::filesystem::path file)
    : file_(std::move(file)) {
  if (file_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file_.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory for provenance log " +
                    file_.string() + ": " + ec.message());
    }
  }
}

void ProvenanceLog::append(AugmentationRecord record) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!file_.empty()) {
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to provenance log " + file_.string());
    out << record_to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + file_.string());
  }
  records_.push_back(std::move(record));
}

std::vector<AugmentationRecord> ProvenanceLog::records() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return records_;
}

std::vector<AugmentationRecord> ProvenanceLog::read(
    const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open provenance log: " + file.string());
  std::vector<AugmentationRecord> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim_copy(line).empty()) continue;
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(line);
      AugmentationRecord record;
      record.pair_id = parsed.at("pair_id").get<std::string>();
      const auto op = parse_op(parsed.at("op").get<std::string>());
      if (!op) {
        throw SchemaError("unknown op \"" +
                          parsed.at("op").get<std::string>() + "\"");
      }
      record.op = *op;
      record.prompt_sha256 = parsed.at("prompt_sha256").get<std::string>();
      record.raw_response = parsed.at("raw_response").get<std::string>();
      record.created_unix_ms = parsed.at("created_unix_ms").get<std::int64_t>();
      out.push_back(std::move(record));
    } catch (const nlohmann::json::exception& error) {
      throw SchemaError("provenance log " + file.string() + " line " +
                        std::to_string(line_number) + ": " + error.what());
    }
  }
  if (in.bad()) throw IoError("read failed: " + file.string());
  return out;
}

// --- operations ---

std::vector<CodeCommentPair> derange_comments(std::vector<CodeCommentPair> pairs,
                                              std::uint64_t seed) {
  const std::size_t n = pairs.size();
  if (n < 2) {
    throw DerangementError("no derangement exists for " + std::to_string(n) +
                           " pair(s)");
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> perm(n);
  /* Rejection sampling: shuffles are uniform over permutations, so the
   * accepted one is uniform over derangements. Acceptance odds approach
   * 1/e; the cap is unreachable in practice and guards against a broken
   * generator only. */
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= kMaxAttempts) {
      throw DerangementError("could not sample a derangement");
    }
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(perm, rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i] == i) {
        fixed_point = true;
        break;
      }
    }
    if (!fixed_point) break;
  }
  std::vector<std::string> original_comments(n);
  for (std::size_t i = 0; i < n; ++i) original_comments[i] = pairs[i].comment;
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i].comment = original_comments[perm[i]];
    pairs[i].label = Label::NotUseful;
  }
  return pairs;
}

Label parse_label(std::string_view response) {
  const std::string lowered = lower_copy(response);
  if (lowered.find("not useful") != std::string::npos) {
    return Label::NotUseful;
  }
  if (lowered.find("useful") != std::string::npos) {
    return Label::Useful;
  }
  throw ResponseParseError("completion names no label",
                           std::string(response));
}

Label llm_label_pair(ChatClient& client, const CodeCommentPair& pair,
                     const PromptTemplate& prompt, ProvenanceLog& log,
                     const RetryPolicy& retry) {
  const std::string rendered = prompt.render(pair.comment, pair.code_context);
  const std::string response = complete_with_retry(client, rendered, retry);
  AugmentationRecord record;
  record.pair_id = pair.id;
  record.op = AugmentOp::LlmLabeled;
  record.prompt_sha256 = prompt_hash(rendered);
  record.raw_response = response;
  record.created_unix_ms = now_unix_ms();
  log.append(std::move(record));
  return parse_label(response);
}

std::string llm_generate_comment(ChatClient& client, const std::string& pair_id,
                                 const std::string& code,
                                 const PromptTemplate& prompt,
                                 ProvenanceLog& log, const RetryPolicy& retry) {
  if (trim_copy(code).empty()) {
    throw InvalidArgument("cannot generate a comment for empty code (pair " +
                          pair_id + ")");
  }
  const std::string rendered = prompt.render("", code);
  const std::string response = complete_with_retry(client, rendered, retry);
  AugmentationRecord record;
  record.pair_id = pair_id;
  record.op = AugmentOp::LlmGenerated;
  record.prompt_sha256 = prompt_hash(rendered);
  record.raw_response = response;
  record.created_unix_ms = now_unix_ms();
  log.append(std::move(record));
  const std::string trimmed = trim_copy(response);
  if (trimmed.empty()) {
    throw ContentError("generated comment for pair " + pair_id +
                       " is empty after trimming");
  }
  return trimmed;
}

LabelDatasetResult llm_label_dataset(const Dataset& dataset, ChatClient& client,
                                     const PromptTemplate& prompt,
                                     ProvenanceLog& log, unsigned parallelism,
                                     const RetryPolicy& retry,
                                     std::chrono::milliseconds min_interval) {
  const std::size_t count = dataset.pairs.size();
  std::vector<std::optional<Label>> labels(count);
  std::vector<std::optional<std::string>> errors(count);

  RateLimiter limiter(min_interval);
  parallel_for(count, parallelism, limiter, [&](std::size_t i) {
    try {
      labels[i] = llm_label_pair(client, dataset.pairs[i], prompt, log, retry);
    } catch (const Error& error) {
      errors[i] = error.what();
    }
  });

  LabelDatasetResult result;
  result.dataset.name = dataset.name;
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) {
      result.failures.push_back({dataset.pairs[i].id, *errors[i]});
      continue;
    }
    CodeCommentPair pair = dataset.pairs[i];
    pair.label = *labels[i];
    pair.source = DataSource::LlmCollected;
    result.dataset.pairs.push_back(std::move(pair));
  }
  return result;
}

namespace {

/* Seeded sample of `take` positions out of `pool`, returned in ascending
 * order so the result keeps corpus order. */
std::vector<std::size_t> sample_indices(std::vector<std::size_t> pool,
                                        std::size_t take, std::uint64_t seed) {
  SplitMix64 rng(seed);
  shuffle(pool, rng);
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

ExtraGenResult build_extra_generated(const Dataset& original,
                                     ChatClient& client, std::uint64_t seed,
                                     const PromptLibrary& prompts,
                                     ProvenanceLog& log,
                                     const ExtraGenConfig& config) {
  std::vector<std::size_t> useful_indices, not_useful_indices;
  for (std::size_t i = 0; i < original.pairs.size(); ++i) {
    (original.pairs[i].label == Label::Useful ? useful_indices
                                              : not_useful_indices)
        .push_back(i);
  }
  if (useful_indices.size() < config.useful_sample) {
    throw SamplingError("useful class has " +
                        std::to_string(useful_indices.size()) +
                        " pairs, asked to derange " +
                        std::to_string(config.useful_sample));
  }
  if (not_useful_indices.size() < config.not_useful_sample) {
    throw SamplingError("not useful class has " +
                        std::to_string(not_useful_indices.size()) +
                        " pairs, asked to re-comment " +
                        std::to_string(config.not_useful_sample));
  }

  ExtraGenResult result;
  result.dataset.name = original.name + "-extra";

  /* Deranged block: sampled Useful pairs whose comments get reassigned. */
  if (config.useful_sample > 0) {
    const auto chosen =
        sample_indices(useful_indices, config.useful_sample,
                       derive_stream(seed, "sample-useful"));
    std::vector<CodeCommentPair> block;
    block.reserve(chosen.size());
    for (std::size_t index : chosen) block.push_back(original.pairs[index]);
    block = derange_comments(std::move(block), derive_stream(seed, "derange"));
    for (auto& pair : block) {
      pair.id += "/deranged";
      pair.source = DataSource::ExtraGenerated;
      AugmentationRecord record;
      record.pair_id = pair.id;
      record.op = AugmentOp::Deranged;
      record.created_unix_ms = now_unix_ms();
      log.append(std::move(record));
      result.dataset.pairs.push_back(std::move(pair));
    }
  }

  /* Generated block: sampled Not Useful codes get fresh comments. */
  if (config.not_useful_sample > 0) {
    const auto chosen =
        sample_indices(not_useful_indices, config.not_useful_sample,
                       derive_stream(seed, "sample-not-useful"));
    std::vector<std::optional<CodeCommentPair>> generated(chosen.size());
    std::vector<std::optional<std::string>> errors(chosen.size());

    RateLimiter limiter(config.min_request_interval);
    parallel_for(chosen.size(), config.parallelism, limiter,
                 [&](std::size_t i) {
                   const CodeCommentPair& source = original.pairs[chosen[i]];
                   const std::string new_id = source.id + "/generated";
                   try {
                     CodeCommentPair pair;
                     pair.id = new_id;
                     pair.comment = llm_generate_comment(
                         client, new_id, source.code_context,
                         prompts.comment_generation, log, config.retry);
                     pair.code_context = source.code_context;
                     pair.label = Label::Useful;
                     pair.source = DataSource::ExtraGenerated;
                     generated[i] = std::move(pair);
                   } catch (const Error& error) {
                     errors[i] = error.what();
                   }
                 });

    for (std::size_t i = 0; i < chosen.size(); ++i) {
      if (errors[i]) {
        result.failures.push_back(
            {original.pairs[chosen[i]].id + "/generated", *errors[i]});
        continue;
      }
      result.dataset.pairs.push_back(std::move(*generated[i]));
    }
  }

  return result;
}

}  // namespace comuse
