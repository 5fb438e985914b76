// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "comuse/corpus.hpp"

namespace comuse {

using TokenSequence = std::vector<std::string>;
using Embedding = std::vector<double>;

/* Pooled code vector followed by pooled comment vector; length is twice
 * the embedder dimension. */
using PairRepresentation = std::vector<double>;

/* Splits on Unicode whitespace (ASCII space/tab/newline plus NBSP, the
 * general punctuation spaces, line/paragraph separators, etc.). Tokens are
 * kept verbatim: no case folding, no punctuation stripping. */
TokenSequence tokenize(std::string_view text);

/* Arithmetic mean of the rows. An empty list pools to the zero vector of
 * the requested dimension, so empty code contexts stay representable.
 * Throws DimensionError when rows disagree with `dim`. */
Embedding mean_pool(const std::vector<Embedding>& rows, std::size_t dim);

/* Token-to-vector backend. Implementations must be pure: equal tokens map
 * to equal vectors, with no visible state. */
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::size_t dim() const noexcept = 0;

  /* One row per token, each of length dim(). */
  virtual std::vector<Embedding> embed_tokens(const TokenSequence& tokens) const = 0;

  /* Stable identifier derived from the backend kind and its configuration.
   * Representation caches are keyed by this, so it must change whenever
   * the embedding function changes. */
  virtual std::string fingerprint() const = 0;
};

/* Tokenize + pool one text. */
Embedding represent_text(const Embedder& embedder, std::string_view text);

/* Code half first, comment half second. The layout is fixed and recorded
 * in trained models so train and predict can never disagree. */
PairRepresentation represent_pair(const Embedder& embedder,
                                  const CodeCommentPair& pair);

/* Deterministic stand-in for a trained encoder: each token's vector is
 * drawn from a PRNG keyed by (seed, token hash), entries bounded by
 * 1/sqrt(dim). Exists so the full pipeline runs end to end, and as the
 * test-time embedder. */
std::unique_ptr<Embedder> hash_embed(std::uint64_t seed, std::size_t dim);

/* Loads per-token vectors exported from a real encoder, keyed by token
 * sequence. Queries for sequences missing from the file throw
 * UnknownSequenceError. See docs/FORMATS.md for the file layout. */
std::unique_ptr<Embedder> load_precomputed(const std::filesystem::path& path);

/* Key under which a token sequence is stored in a precomputed file:
 * FNV-1a over the tokens joined by a single space. */
std::uint64_t sequence_key(const TokenSequence& tokens) noexcept;

/* Writer for the precomputed format; used by export tooling and tests. */
struct SequenceEmbedding {
  std::string text;             /* tokenized with tokenize() to form the key */
  std::vector<Embedding> rows;  /* one row per token */
};
void write_precomputed(const std::filesystem::path& path, std::size_t dim,
                       const std::vector<SequenceEmbedding>& sequences);

/* Hash of the fields a representation depends on (comment and code, not
 * label). Cached representations are validated against it so stale cache
 * entries for an edited pair never leak in. */
std::uint64_t pair_content_hash(const CodeCommentPair& pair) noexcept;

/* Persistent id -> representation map for one embedder fingerprint.
 * Lookup requires the stored content hash to match. Not thread-safe;
 * represent_all coordinates its own access. */
class RepresentationCache {
 public:
  /* Binds to `file` and loads it when it exists. */
  explicit RepresentationCache(std::filesystem::path file);

  const PairRepresentation* find(const std::string& id,
                                 std::uint64_t content_hash) const;
  void put(const std::string& id, std::uint64_t content_hash,
           PairRepresentation rep);

  /* Atomic rewrite (temp file + rename). */
  void save() const;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::filesystem::path& file() const noexcept { return file_; }

  /* Canonical cache location for an embedder under a cache directory. */
  static std::filesystem::path file_for(const std::filesystem::path& dir,
                                        const Embedder& embedder);

 private:
  struct Entry {
    std::uint64_t content_hash = 0;
    PairRepresentation rep;
  };
  std::filesystem::path file_;
  std::unordered_map<std::string, Entry> entries_;
};

/* Representations for every pair, in dataset order. Cache hits are reused,
 * misses are computed (across `threads` workers when > 1) and inserted.
 * The cache is not saved; call cache->save() when persistence is wanted. */
std::vector<PairRepresentation> represent_all(const Embedder& embedder,
                                              const Dataset& dataset,
                                              RepresentationCache* cache = nullptr,
                                              unsigned threads = 1);

}  // namespace comuse
