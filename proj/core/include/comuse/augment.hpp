// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comuse/chat_client.hpp"
#include "comuse/corpus.hpp"

namespace comuse {

/* Prompt text with {comment} and {code} placeholders. render() substitutes
 * every placeholder occurrence in one left-to-right pass over the template,
 * so braces inside the substituted values stay literal. */
struct PromptTemplate {
  std::string name;
  std::string text;

  std::string render(std::string_view comment, std::string_view code) const;
};

/* The two prompts augmentation needs. load() reads a JSON file with keys
 * `label_query` and `comment_generation`; defaults() is what ships. */
struct PromptLibrary {
  PromptTemplate label_query;
  PromptTemplate comment_generation;

  static PromptLibrary defaults();
  static PromptLibrary load(const std::filesystem::path& path);
};

enum class AugmentOp : std::uint8_t { Deranged, LlmLabeled, LlmGenerated };
std::string_view to_string(AugmentOp op) noexcept;

/* Where an augmented pair came from: which source pair, which operation,
 * and for LLM operations the prompt digest and raw response. */
struct AugmentationRecord {
  std::string pair_id;
  AugmentOp op = AugmentOp::Deranged;
  std::string prompt_sha256; /* empty for Deranged */
  std::string raw_response;  /* empty for Deranged */
  std::int64_t created_unix_ms = 0;
};

/* Append-only record sink. With a file attached, every record is also
 * written out as one JSON line immediately. Appends are thread-safe. */
class ProvenanceLog {
 public:
  ProvenanceLog() = default; /* in-memory only */
  explicit ProvenanceLog(std::filesystem::path file);

  void append(AugmentationRecord record);
  std::vector<AugmentationRecord> records() const;

  static std::vector<AugmentationRecord> read(const std::filesystem::path& file);

 private:
  mutable std::mutex mutex_;
  std::vector<AugmentationRecord> records_;
  std::filesystem::path file_;
};

/* Reassigns comments by a uniformly random derangement: every pair ends up
 * with some other pair's comment, never its own. Codes, ids and order stay
 * put; the comment multiset is preserved; labels all become Not Useful.
 * Throws DerangementError for fewer than two pairs. */
std::vector<CodeCommentPair> derange_comments(std::vector<CodeCommentPair> pairs,
                                              std::uint64_t seed);

/* Maps a completion to a label. "not useful" anywhere in the text (case
 * insensitive) wins over "useful", since the latter is a substring of the
 * former. Throws ResponseParseError when neither phrase occurs. */
Label parse_label(std::string_view response);

/* Asks the client whether the pair's comment is useful and parses the
 * answer. Appends one LlmLabeled record. */
Label llm_label_pair(ChatClient& client, const CodeCommentPair& pair,
                     const PromptTemplate& prompt, ProvenanceLog& log,
                     const RetryPolicy& retry = {});

/* Asks the client to write a comment for `code`. Returns the trimmed
 * completion and appends one LlmGenerated record. Throws InvalidArgument
 * for empty code and ContentError for a whitespace-only completion. */
std::string llm_generate_comment(ChatClient& client, const std::string& pair_id,
                                 const std::string& code,
                                 const PromptTemplate& prompt,
                                 ProvenanceLog& log,
                                 const RetryPolicy& retry = {});

struct AugmentFailure {
  std::string pair_id;
  std::string reason;
};

struct LabelDatasetResult {
  Dataset dataset; /* successfully labeled pairs, source = llm_collected */
  std::vector<AugmentFailure> failures;
};

/* Relabels every pair through the client. Failed pairs are dropped and
 * reported rather than aborting the batch. */
LabelDatasetResult llm_label_dataset(const Dataset& dataset, ChatClient& client,
                                     const PromptTemplate& prompt,
                                     ProvenanceLog& log,
                                     unsigned parallelism = 1,
                                     const RetryPolicy& retry = {},
                                     std::chrono::milliseconds min_interval = {});

struct ExtraGenConfig {
  std::size_t useful_sample = 250;     /* Useful pairs to derange */
  std::size_t not_useful_sample = 250; /* Not Useful codes to re-comment */
  unsigned parallelism = 1;
  RetryPolicy retry;
  std::chrono::milliseconds min_request_interval{0};
};

struct ExtraGenResult {
  Dataset dataset; /* deranged block first, then generated block */
  std::vector<AugmentFailure> failures;
};

/* Builds the synthetic balance set: a seeded sample of Useful pairs gets
 * deranged comments (and the Not Useful label), a seeded sample of Not
 * Useful pairs gets freshly generated comments (and the Useful label).
 * Every emitted pair carries source = extra_generated and one provenance
 * record. Generation failures cost only their own pair and are listed in
 * the result. Throws SamplingError when a class is smaller than its
 * requested sample. */
ExtraGenResult build_extra_generated(const Dataset& original, ChatClient& client,
                                     std::uint64_t seed,
                                     const PromptLibrary& prompts,
                                     ProvenanceLog& log,
                                     const ExtraGenConfig& config = {});

}  // namespace comuse
