// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "comuse/embed.hpp"
#include "comuse/errors.hpp"
#include "support/synth.hpp"
#include "support/tmpdir.hpp"

using namespace comuse;

namespace {

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_bytes(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  out << data;
}

/* Pure pass-through that counts embed_tokens calls, for cache assertions. */
class CountingEmbedder final : public Embedder {
 public:
  explicit CountingEmbedder(std::unique_ptr<Embedder> inner)
      : inner_(std::move(inner)) {}

  std::size_t dim() const noexcept override { return inner_->dim(); }
  std::vector<Embedding> embed_tokens(const TokenSequence& tokens) const override {
    calls_.fetch_add(1);
    return inner_->embed_tokens(tokens);
  }
  std::string fingerprint() const override { return inner_->fingerprint(); }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::unique_ptr<Embedder> inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace

TEST_CASE("tokenize splits on ascii whitespace and keeps tokens verbatim") {
  CHECK(tokenize("alpha beta") == TokenSequence{"alpha", "beta"});
  CHECK(tokenize("") == TokenSequence{});
  CHECK(tokenize("   \t\n  ") == TokenSequence{});
  CHECK(tokenize("one") == TokenSequence{"one"});
  CHECK(tokenize("  lead trail  ") == TokenSequence{"lead", "trail"});
  CHECK(tokenize("a\tb\nc\rd\ve\ff") ==
        TokenSequence{"a", "b", "c", "d", "e", "f"});
  CHECK(tokenize("crlf\r\nline") == TokenSequence{"crlf", "line"});
  /* verbatim: no case folding, no punctuation stripping */
  CHECK(tokenize("Foo.bar(x, y;") == TokenSequence{"Foo.bar(x,", "y;"});
  CHECK(tokenize("runs    of spaces") == TokenSequence{"runs", "of", "spaces"});
}

TEST_CASE("tokenize treats unicode space separators as whitespace") {
  /* NBSP U+00A0 */
  CHECK(tokenize("a\xc2\xa0"
                 "b") == TokenSequence{"a", "b"});
  /* NEL U+0085 */
  CHECK(tokenize("a\xc2\x85"
                 "b") == TokenSequence{"a", "b"});
  /* ogham space mark U+1680 */
  CHECK(tokenize("a\xe1\x9a\x80"
                 "b") == TokenSequence{"a", "b"});
  /* en quad U+2000 and hair space U+200A bracket the general block */
  CHECK(tokenize("a\xe2\x80\x80"
                 "b\xe2\x80\x8a"
                 "c") == TokenSequence{"a", "b", "c"});
  /* line separator U+2028, paragraph separator U+2029 */
  CHECK(tokenize("a\xe2\x80\xa8"
                 "b\xe2\x80\xa9"
                 "c") == TokenSequence{"a", "b", "c"});
  /* narrow no-break U+202F, medium mathematical U+205F */
  CHECK(tokenize("a\xe2\x80\xaf"
                 "b\xe2\x81\x9f"
                 "c") == TokenSequence{"a", "b", "c"});
  /* ideographic space U+3000 */
  CHECK(tokenize("你好\xe3\x80\x80世界") == TokenSequence{"你好", "世界"});
  /* zero-width space U+200B is NOT a separator */
  CHECK(tokenize("a\xe2\x80\x8b"
                 "b") == TokenSequence{"a\xe2\x80\x8b"
                                       "b"});
}

TEST_CASE("tokenize passes invalid utf-8 through byte by byte") {
  /* lone continuation bytes and a truncated lead survive as token content */
  const std::string junk = "x \xff\xfe y \xe2\x80";
  CHECK(tokenize(junk) == TokenSequence{"x", "\xff\xfe", "y", "\xe2\x80"});
}

TEST_CASE("mean_pool averages rows and pools nothing to zero") {
  CHECK(mean_pool({{1.0, 3.0}, {3.0, 5.0}}, 2) == Embedding{2.0, 4.0});
  CHECK(mean_pool({{2.0, -2.0, 6.0}}, 3) == Embedding{2.0, -2.0, 6.0});
  CHECK(mean_pool({}, 3) == Embedding{0.0, 0.0, 0.0});
  CHECK(mean_pool({}, 0) == Embedding{});
  CHECK_THROWS_AS(mean_pool({{1.0, 2.0}, {1.0}}, 2), DimensionError);
  CHECK_THROWS_AS(mean_pool({{1.0, 2.0, 3.0}}, 2), DimensionError);
}

TEST_CASE("hash embedder reproduces its frozen token vectors") {
  const auto embedder = hash_embed(7, 4);
  REQUIRE(embedder->dim() == 4);

  /* Expected values computed with an independent reimplementation of
   * FNV-1a and SplitMix64 (outside this codebase). Exact equality: the
   * embedder is a pinned function, not an approximation. */
  const auto rows = embedder->embed_tokens({"alpha", "beta"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == Embedding{-0.40589041196330955, 0.29666354751509072,
                             0.14870362437459927, 0.45863440338371131});
  CHECK(rows[1] == Embedding{-0.27054219756972597, 0.03145019678558314,
                             0.065886159143885958, -0.082504053043545578});
}

TEST_CASE("hash embedder is pure and seed and dim sensitive") {
  const auto a = hash_embed(7, 16);
  const auto b = hash_embed(7, 16);
  const auto other_seed = hash_embed(8, 16);

  const auto row_a = a->embed_tokens({"counter"});
  CHECK(row_a == a->embed_tokens({"counter"}));    /* no hidden state */
  CHECK(row_a == b->embed_tokens({"counter"}));    /* instance independent */
  CHECK(row_a != other_seed->embed_tokens({"counter"}));

  CHECK(a->fingerprint() == b->fingerprint());
  CHECK(a->fingerprint() != other_seed->fingerprint());
  CHECK(a->fingerprint() != hash_embed(7, 17)->fingerprint());

  const double bound = 1.0 / std::sqrt(16.0);
  for (const auto& row : a->embed_tokens({"x", "y", "let", "还"})) {
    REQUIRE(row.size() == 16);
    for (double v : row) {
      CHECK(std::abs(v) <= bound);
    }
  }
}

TEST_CASE("represent_pair is code half then comment half") {
  const auto embedder = hash_embed(7, 4);
  CodeCommentPair pair;
  pair.comment = "alpha";
  pair.code_context = "beta";

  const auto rep = represent_pair(*embedder, pair);
  REQUIRE(rep.size() == 8);
  const auto code_row = embedder->embed_tokens({"beta"})[0];
  const auto comment_row = embedder->embed_tokens({"alpha"})[0];
  CHECK(PairRepresentation(rep.begin(), rep.begin() + 4) == code_row);
  CHECK(PairRepresentation(rep.begin() + 4, rep.end()) == comment_row);
}

TEST_CASE("empty code context pools to an all-zero code half") {
  const auto embedder = hash_embed(3, 5);
  CodeCommentPair pair;
  pair.comment = "something";
  pair.code_context = "";
  const auto rep = represent_pair(*embedder, pair);
  REQUIRE(rep.size() == 10);
  for (std::size_t k = 0; k < 5; ++k) CHECK(rep[k] == 0.0);
  CHECK(rep[5] != 0.0); /* the comment half is not degenerate */
}

TEST_CASE("represent_text averages the token vectors") {
  const auto embedder = hash_embed(7, 4);
  const auto rows = embedder->embed_tokens({"alpha", "beta"});
  const auto pooled = represent_text(*embedder, "alpha beta");
  REQUIRE(pooled.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(pooled[k] == doctest::Approx(0.5 * (rows[0][k] + rows[1][k])).epsilon(1e-15));
  }
}

TEST_CASE("sequence keys hash the tokens joined by single spaces") {
  /* 0x0d92afb6966f1a43 is FNV-1a("alpha beta"), computed independently. */
  CHECK(sequence_key({"alpha", "beta"}) == 0x0d92afb6966f1a43ULL);
  CHECK(sequence_key(tokenize("alpha    beta")) == 0x0d92afb6966f1a43ULL);
  CHECK(sequence_key(tokenize("alpha\n\tbeta")) == 0x0d92afb6966f1a43ULL);
  /* empty sequence hashes to the FNV offset basis */
  CHECK(sequence_key({}) == 0xcbf29ce484222325ULL);
  /* token boundaries matter */
  CHECK(sequence_key({"alphabeta"}) != sequence_key({"alpha", "beta"}));
  CHECK(sequence_key({"alpha beta"}) == sequence_key({"alpha", "beta"}));
}

TEST_CASE("pair content hash covers comment and code only") {
  CodeCommentPair pair;
  pair.id = "x1";
  pair.comment = "hello world";
  pair.code_context = "int x;";
  /* frozen via an independent FNV-1a reimplementation */
  CHECK(pair_content_hash(pair) == 0xa5812605bf1876d6ULL);

  CodeCommentPair relabeled = pair;
  relabeled.id = "y9";
  relabeled.label = Label::NotUseful;
  relabeled.source = DataSource::ExtraGenerated;
  CHECK(pair_content_hash(relabeled) == pair_content_hash(pair));

  CodeCommentPair edited = pair;
  edited.comment = "hello worlD";
  CHECK(pair_content_hash(edited) != pair_content_hash(pair));

  /* the separator keeps (comment, code) boundaries unambiguous */
  CodeCommentPair shifted = pair;
  shifted.comment = "hello world i";
  shifted.code_context = "nt x;";
  CHECK(pair_content_hash(shifted) != pair_content_hash(pair));
}

TEST_CASE("precomputed store round-trips and validates") {
  synth::TmpDir dir("embed");
  const auto file = dir / "store.bin";

  std::vector<SequenceEmbedding> sequences;
  sequences.push_back({"alpha beta", {{0.25, -1.5}, {3.0, 0.125}}});
  sequences.push_back({"gamma", {{0.5, 2.0}}});
  sequences.push_back({"", {}}); /* the empty sequence is storable */
  write_precomputed(file, 2, sequences);

  const auto embedder = load_precomputed(file);
  CHECK(embedder->dim() == 2);
  CHECK(embedder->fingerprint().substr(0, 4) == "pre-");

  const auto rows = embedder->embed_tokens({"alpha", "beta"});
  REQUIRE(rows.size() == 2);
  /* values pass through an f32 stage; these literals are f32-exact */
  CHECK(rows[0] == Embedding{0.25, -1.5});
  CHECK(rows[1] == Embedding{3.0, 0.125});
  CHECK(embedder->embed_tokens({"gamma"})[0] == Embedding{0.5, 2.0});
  CHECK(embedder->embed_tokens({}).empty());

  CHECK_THROWS_AS(embedder->embed_tokens({"delta"}), UnknownSequenceError);

  /* same file loaded twice gives the same fingerprint */
  CHECK(load_precomputed(file)->fingerprint() == embedder->fingerprint());
}

TEST_CASE("precomputed store rejects a sequence with the wrong row count") {
  synth::TmpDir dir("embed");
  const auto file = dir / "store.bin";
  write_precomputed(file, 2, {{"two tokens", {{1.0, 1.0}}}});
  const auto embedder = load_precomputed(file);
  CHECK_THROWS_AS(embedder->embed_tokens(tokenize("two tokens")), SchemaError);
}

TEST_CASE("precomputed store rejects corruption") {
  synth::TmpDir dir("embed");
  const auto file = dir / "store.bin";
  write_precomputed(file, 2, {{"alpha", {{1.0, 2.0}}}});
  const std::string good = read_bytes(file);

  SUBCASE("flipped payload byte fails the checksum") {
    std::string bad = good;
    bad[bad.size() / 2] ^= 0x20;
    write_bytes(file, bad);
    CHECK_THROWS_AS(load_precomputed(file), ModelFormatError);
  }
  SUBCASE("truncation") {
    write_bytes(file, good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_precomputed(file), ModelFormatError);
  }
  SUBCASE("trailing bytes") {
    write_bytes(file, good + "x");
    CHECK_THROWS_AS(load_precomputed(file), ModelFormatError);
  }
  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    write_bytes(file, bad);
    CHECK_THROWS_AS(load_precomputed(file), ModelFormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_precomputed(dir / "nope.bin"), IoError);
  }
}

TEST_CASE("representation cache stores, validates and persists") {
  synth::TmpDir dir("embed");
  const auto embedder = hash_embed(7, 4);
  const auto file = RepresentationCache::file_for(dir.path(), *embedder);
  CHECK(file.filename().string() ==
        "reps-" + embedder->fingerprint() + ".bin");

  RepresentationCache cache(file);
  CHECK(cache.size() == 0);
  cache.put("a", 11, {1.0, 2.0});
  cache.put("b", 22, {3.0, 4.0});

  REQUIRE(cache.find("a", 11) != nullptr);
  CHECK(*cache.find("a", 11) == PairRepresentation{1.0, 2.0});
  CHECK(cache.find("a", 12) == nullptr); /* stale content hash */
  CHECK(cache.find("c", 11) == nullptr);

  cache.save();
  RepresentationCache reloaded(file);
  CHECK(reloaded.size() == 2);
  REQUIRE(reloaded.find("b", 22) != nullptr);
  CHECK(*reloaded.find("b", 22) == PairRepresentation{3.0, 4.0});

  /* replacement by id */
  cache.put("a", 33, {9.0});
  CHECK(cache.find("a", 11) == nullptr);
  CHECK(*cache.find("a", 33) == PairRepresentation{9.0});
}

TEST_CASE("representation cache files are byte-stable across insert order") {
  synth::TmpDir dir("embed");
  RepresentationCache forward(dir / "f.bin");
  forward.put("x", 1, {1.0});
  forward.put("y", 2, {2.0});
  forward.save();

  RepresentationCache backward(dir / "b.bin");
  backward.put("y", 2, {2.0});
  backward.put("x", 1, {1.0});
  backward.save();

  CHECK(read_bytes(dir / "f.bin") == read_bytes(dir / "b.bin"));
}

TEST_CASE("represent_all matches per-pair embedding and reuses the cache") {
  synth::TmpDir dir("embed");
  const auto dataset = synth::hostile_dataset(24, 99);

  CountingEmbedder counted(hash_embed(7, 8));
  RepresentationCache cache(dir / "reps.bin");

  const auto first = represent_all(counted, dataset, &cache);
  REQUIRE(first.size() == dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    CHECK(first[i] == represent_pair(counted, dataset.pairs[i]));
  }

  const auto baseline_calls = counted.calls();
  const auto second = represent_all(counted, dataset, &cache);
  CHECK(second == first);
  CHECK(counted.calls() == baseline_calls); /* every pair was a cache hit */

  /* an edited pair misses and is recomputed */
  Dataset edited = dataset;
  edited.pairs[3].comment += " tail";
  const auto third = represent_all(counted, edited, &cache);
  CHECK(counted.calls() > baseline_calls);
  CHECK(third[3] == represent_pair(counted, edited.pairs[3]));
  CHECK(third[4] == first[4]);
}

TEST_CASE("represent_all is thread-count invariant") {
  const auto dataset = synth::hostile_dataset(40, 123);
  const auto embedder = hash_embed(3, 6);
  const auto serial = represent_all(*embedder, dataset, nullptr, 1);
  const auto threaded = represent_all(*embedder, dataset, nullptr, 4);
  CHECK(serial == threaded);
}

TEST_CASE("represent_all works without a cache") {
  const auto dataset = synth::counted_dataset(3, 2);
  const auto embedder = hash_embed(1, 4);
  const auto reps = represent_all(*embedder, dataset);
  REQUIRE(reps.size() == 5);
  for (const auto& rep : reps) CHECK(rep.size() == 8);
}
