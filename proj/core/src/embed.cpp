// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "comuse/errors.hpp"
#include "comuse/hash.hpp"
#include "comuse/rng.hpp"
#include "fsutil.hpp"

namespace comuse {

namespace {

/* Unicode code points treated as whitespace. Covers the ASCII set plus
 * the separators that show up in real source comments: NBSP, ogham space,
 * the U+2000 block, line/paragraph separators, narrow/ideographic spaces. */
bool is_space_codepoint(char32_t cp) {
  switch (cp) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x0085: case 0x00a0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202f: case 0x205f: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

/* Decodes one UTF-8 code point at `i`, advancing it. Bytes that do not
 * form a valid sequence are passed through one at a time so garbage in a
 * comment cannot derail tokenization. */
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const auto byte = [&](std::size_t k) {
    return static_cast<unsigned char>(text[k]);
  };
  const unsigned char lead = byte(i);
  std::size_t length = 0;
  if (lead < 0x80) length = 1;
  else if ((lead >> 5) == 0x6) length = 2;
  else if ((lead >> 4) == 0xe) length = 3;
  else if ((lead >> 3) == 0x1e) length = 4;

  if (length == 0 || i + length > text.size()) {
    ++i;
    return lead; /* lone continuation or truncated sequence */
  }
  for (std::size_t k = 1; k < length; ++k) {
    if ((byte(i + k) >> 6) != 0x2) {
      ++i;
      return lead;
    }
  }
  char32_t cp = 0;
  switch (length) {
    case 1: cp = lead; break;
    case 2: cp = lead & 0x1f; break;
    case 3: cp = lead & 0x0f; break;
    default: cp = lead & 0x07; break;
  }
  for (std::size_t k = 1; k < length; ++k) {
    cp = (cp << 6) | (byte(i + k) & 0x3f);
  }
  i += length;
  return cp;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  std::size_t i = 0;
  std::size_t token_begin = 0;
  bool in_token = false;
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_space_codepoint(cp)) {
      if (in_token) {
        tokens.emplace_back(text.substr(token_begin, at - token_begin));
        in_token = false;
      }
    } else if (!in_token) {
      token_begin = at;
      in_token = true;
    }
  }
  if (in_token) {
    tokens.emplace_back(text.substr(token_begin));
  }
  return tokens;
}

Embedding mean_pool(const std::vector<Embedding>& rows, std::size_t dim) {
  Embedding pooled(dim, 0.0);
  if (rows.empty()) return pooled;
  for (const auto& row : rows) {
    if (row.size() != dim) {
      throw DimensionError("mean_pool: row of length " +
                           std::to_string(row.size()) + ", expected " +
                           std::to_string(dim));
    }
    for (std::size_t k = 0; k < dim; ++k) pooled[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : pooled) v *= inv;
  return pooled;
}

Embedding represent_text(const Embedder& embedder, std::string_view text) {
  return mean_pool(embedder.embed_tokens(tokenize(text)), embedder.dim());
}

PairRepresentation represent_pair(const Embedder& embedder,
                                  const CodeCommentPair& pair) {
  PairRepresentation rep = represent_text(embedder, pair.code_context);
  const Embedding comment = represent_text(embedder, pair.comment);
  rep.insert(rep.end(), comment.begin(), comment.end());
  return rep;
}

std::uint64_t sequence_key(const TokenSequence& tokens) noexcept {
  std::uint64_t state = kFnv64Offset;
  bool first = true;
  for (const auto& token : tokens) {
    if (!first) state = fnv1a64(" ", state);
    first = false;
    state = fnv1a64(token, state);
  }
  return state;
}

// --- hash embedder ---

namespace {

class HashEmbedder final : public Embedder {
 public:
  HashEmbedder(std::uint64_t seed, std::size_t dim)
      : seed_(seed), dim_(dim), scale_(1.0 / std::sqrt(static_cast<double>(dim))) {
    if (dim == 0) throw InvalidArgument("hash embedder dim must be positive");
  }

  std::size_t dim() const noexcept override { return dim_; }

  std::vector<Embedding> embed_tokens(const TokenSequence& tokens) const override {
    std::vector<Embedding> rows;
    rows.reserve(tokens.size());
    for (const auto& token : tokens) {
      /* stream keyed by (seed, token hash); same token, same vector */
      std::uint64_t key = fnv1a64(token);
      std::uint64_t seed_bytes = seed_;
      key = fnv1a64_bytes(&seed_bytes, sizeof seed_bytes, key);
      SplitMix64 rng(key);
      Embedding row(dim_);
      for (double& v : row) {
        v = (2.0 * rng.next_unit() - 1.0) * scale_;
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  std::string fingerprint() const override {
    const std::string config = "hash:dim=" + std::to_string(dim_) +
                               ":seed=" + std::to_string(seed_);
    return "hash-" + hex64(fnv1a64(config));
  }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
  double scale_;
};

}  // namespace

std::unique_ptr<Embedder> hash_embed(std::uint64_t seed, std::size_t dim) {
  return std::make_unique<HashEmbedder>(seed, dim);
}

// --- precomputed store ---

namespace {

constexpr char kEmbedMagic[8] = {'C', 'O', 'M', 'U', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kEmbedVersion = 1;

/* Little-endian scalar I/O. The formats are defined as little-endian; the
 * explicit byte handling keeps them portable to big-endian hosts. */
template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  put_le(out, bits);
}

void put_f32(std::string& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  put_le(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& what)
      : data_(data), what_(what) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(data_[pos_ + i]))
              << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(bits);
  }

  double get_f64() {
    const std::uint64_t bits = get_le<std::uint64_t>();
    double value;
    std::memcpy(&value, &bits, sizeof value);
    return value;
  }

  float get_f32() {
    const std::uint32_t bits = get_le<std::uint32_t>();
    float value;
    std::memcpy(&value, &bits, sizeof value);
    return value;
  }

  std::string get_bytes(std::size_t count) {
    need(count);
    std::string out = data_.substr(pos_, count);
    pos_ += count;
    return out;
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t count) {
    if (pos_ + count > data_.size()) {
      throw ModelFormatError("truncated " + what_);
    }
  }
  const std::string& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path,
                            const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(std::string("cannot open ") + what + ": " + path.string());
  }
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError(std::string("read failed for ") + what + ": " + path.string());
  }
  return data;
}

class PrecomputedEmbedder final : public Embedder {
 public:
  PrecomputedEmbedder(const std::filesystem::path& path) {
    const std::string data = read_file_bytes(path, "embedding store");
    ByteReader reader(data, "embedding store " + path.string());

    if (reader.get_bytes(sizeof kEmbedMagic) !=
        std::string(kEmbedMagic, sizeof kEmbedMagic)) {
      throw ModelFormatError("bad magic in embedding store " + path.string());
    }
    const auto version = reader.get_le<std::uint32_t>();
    if (version != kEmbedVersion) {
      throw ModelFormatError("unsupported embedding store version " +
                             std::to_string(version));
    }
    dim_ = reader.get_le<std::uint32_t>();
    if (dim_ == 0) {
      throw ModelFormatError("embedding store with dim 0: " + path.string());
    }
    const auto count = reader.get_le<std::uint64_t>();
    for (std::uint64_t n = 0; n < count; ++n) {
      const auto key = reader.get_le<std::uint64_t>();
      const auto token_count = reader.get_le<std::uint32_t>();
      std::vector<Embedding> rows(token_count, Embedding(dim_));
      for (auto& row : rows) {
        for (double& v : row) v = reader.get_f32();
      }
      sequences_[key] = std::move(rows);
    }
    const std::uint64_t declared = reader.get_le<std::uint64_t>();
    const std::uint64_t actual = fnv1a64_bytes(data.data(), reader.pos() - 8);
    if (declared != actual) {
      throw ModelFormatError("checksum mismatch in embedding store " +
                             path.string());
    }
    if (reader.remaining() != 0) {
      throw ModelFormatError("trailing bytes in embedding store " +
                             path.string());
    }
    fingerprint_ = "pre-" + hex64(fnv1a64_bytes(data.data(), data.size()));
  }

  std::size_t dim() const noexcept override { return dim_; }

  std::vector<Embedding> embed_tokens(const TokenSequence& tokens) const override {
    const auto it = sequences_.find(sequence_key(tokens));
    if (it == sequences_.end()) {
      std::string joined;
      for (const auto& token : tokens) {
        if (!joined.empty()) joined += ' ';
        joined += token;
      }
      throw UnknownSequenceError("no stored embedding for sequence: " + joined);
    }
    if (it->second.size() != tokens.size()) {
      throw SchemaError("embedding store has " +
                        std::to_string(it->second.size()) +
                        " rows for a sequence of " +
                        std::to_string(tokens.size()) + " tokens");
    }
    return it->second;
  }

  std::string fingerprint() const override { return fingerprint_; }

 private:
  std::size_t dim_ = 0;
  std::string fingerprint_;
  std::unordered_map<std::uint64_t, std::vector<Embedding>> sequences_;
};

}  // namespace

std::unique_ptr<Embedder> load_precomputed(const std::filesystem::path& path) {
  return std::make_unique<PrecomputedEmbedder>(path);
}

void write_precomputed(const std::filesystem::path& path, std::size_t dim,
                       const std::vector<SequenceEmbedding>& sequences) {
  if (dim == 0) throw InvalidArgument("embedding store dim must be positive");
  std::string out;
  out.append(kEmbedMagic, sizeof kEmbedMagic);
  put_le(out, kEmbedVersion);
  put_le(out, static_cast<std::uint32_t>(dim));
  put_le(out, static_cast<std::uint64_t>(sequences.size()));
  for (const auto& seq : sequences) {
    put_le(out, sequence_key(tokenize(seq.text)));
    put_le(out, static_cast<std::uint32_t>(seq.rows.size()));
    for (const auto& row : seq.rows) {
      if (row.size() != dim) {
        throw DimensionError("embedding row of length " +
                             std::to_string(row.size()) + ", expected " +
                             std::to_string(dim));
      }
      for (double v : row) put_f32(out, static_cast<float>(v));
    }
  }
  put_le(out, fnv1a64_bytes(out.data(), out.size()));
  detail::atomic_write_text(path, out);
}

// --- representation cache ---

std::uint64_t pair_content_hash(const CodeCommentPair& pair) noexcept {
  std::uint64_t state = fnv1a64(pair.comment);
  const char separator = '\x1f';
  state = fnv1a64_bytes(&separator, 1, state);
  return fnv1a64(pair.code_context, state);
}

namespace {
constexpr char kRepMagic[8] = {'C', 'O', 'M', 'U', 'R', 'E', 'P', '\0'};
constexpr std::uint32_t kRepVersion = 1;
}  // namespace

RepresentationCache::RepresentationCache(std::filesystem::path file)
    : file_(std::move(file)) {
  if (!std::filesystem::exists(file_)) return;
  const std::string data = read_file_bytes(file_, "representation cache");
  ByteReader reader(data, "representation cache " + file_.string());
  if (reader.get_bytes(sizeof kRepMagic) !=
      std::string(kRepMagic, sizeof kRepMagic)) {
    throw ModelFormatError("bad magic in representation cache " +
                           file_.string());
  }
  const auto version = reader.get_le<std::uint32_t>();
  if (version != kRepVersion) {
    throw ModelFormatError("unsupported representation cache version " +
                           std::to_string(version));
  }
  const auto count = reader.get_le<std::uint64_t>();
  for (std::uint64_t n = 0; n < count; ++n) {
    const auto id_length = reader.get_le<std::uint32_t>();
    std::string id = reader.get_bytes(id_length);
    Entry entry;
    entry.content_hash = reader.get_le<std::uint64_t>();
    const auto dim = reader.get_le<std::uint32_t>();
    entry.rep.resize(dim);
    for (double& v : entry.rep) v = reader.get_f64();
    entries_[std::move(id)] = std::move(entry);
  }
}

const PairRepresentation* RepresentationCache::find(
    const std::string& id, std::uint64_t content_hash) const {
  const auto it = entries_.find(id);
  if (it == entries_.end() || it->second.content_hash != content_hash) {
    return nullptr;
  }
  return &it->second.rep;
}

void RepresentationCache::put(const std::string& id, std::uint64_t content_hash,
                              PairRepresentation rep) {
  entries_[id] = Entry{content_hash, std::move(rep)};
}

void RepresentationCache::save() const {
  /* Sorted dump so equal contents make equal bytes. */
  std::vector<const std::pair<const std::string, Entry>*> sorted;
  sorted.reserve(entries_.size());
  for (const auto& item : entries_) sorted.push_back(&item);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });

  std::string out;
  out.append(kRepMagic, sizeof kRepMagic);
  put_le(out, kRepVersion);
  put_le(out, static_cast<std::uint64_t>(sorted.size()));
  for (const auto* item : sorted) {
    put_le(out, static_cast<std::uint32_t>(item->first.size()));
    out += item->first;
    put_le(out, item->second.content_hash);
    put_le(out, static_cast<std::uint32_t>(item->second.rep.size()));
    for (double v : item->second.rep) put_f64(out, v);
  }
  detail::atomic_write_text(file_, out);
}

std::filesystem::path RepresentationCache::file_for(
    const std::filesystem::path& dir, const Embedder& embedder) {
  return dir / ("reps-" + embedder.fingerprint() + ".bin");
}

std::vector<PairRepresentation> represent_all(const Embedder& embedder,
                                              const Dataset& dataset,
                                              RepresentationCache* cache,
                                              unsigned threads) {
  const std::size_t n = dataset.size();
  std::vector<PairRepresentation> reps(n);
  std::vector<std::size_t> missing;
  std::vector<std::uint64_t> hashes(n);

  for (std::size_t i = 0; i < n; ++i) {
    hashes[i] = pair_content_hash(dataset.pairs[i]);
    const PairRepresentation* hit =
        cache ? cache->find(dataset.pairs[i].id, hashes[i]) : nullptr;
    if (hit) {
      reps[i] = *hit;
    } else {
      missing.push_back(i);
    }
  }

  const auto compute = [&](std::size_t i) {
    reps[i] = represent_pair(embedder, dataset.pairs[i]);
  };
  if (threads <= 1 || missing.size() < 2) {
    for (std::size_t i : missing) compute(i);
  } else {
    std::atomic<std::size_t> next{0};
    const unsigned worker_count =
        static_cast<unsigned>(std::min<std::size_t>(threads, missing.size()));
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (unsigned w = 0; w < worker_count; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t k = next.fetch_add(1);
          if (k >= missing.size()) return;
          compute(missing[k]);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  if (cache) {
    for (std::size_t i : missing) {
      cache->put(dataset.pairs[i].id, hashes[i], reps[i]);
    }
  }
  return reps;
}

}  // namespace comuse
