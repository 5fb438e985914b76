// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "comuse/corpus.hpp"
#include "comuse/embed.hpp"
#include "comuse/eval.hpp"
#include "comuse/svm.hpp"

namespace comuse {

struct EmbedderConfig {
  std::string kind = "hash"; /* "hash" or "precomputed" */
  std::size_t dim = 200;
  std::uint64_t seed = 7;
  std::filesystem::path precomputed_path; /* kind == "precomputed" only */
};
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

/* Kernel width: the "scale" rule by default, or a fixed value. */
struct GammaSpec {
  bool scale = true;
  double value = 0.0;
};

/* One training/evaluation combination over named dataset parts. */
struct RunSpec {
  std::string name;
  std::vector<std::string> train_parts;
  std::vector<std::string> test_parts;
  EmbedderConfig embedder;
  TrainConfig train;
  GammaSpec gamma;
};

struct ExperimentConfig {
  std::map<std::string, std::filesystem::path> data; /* part name -> csv */
  std::filesystem::path cache_dir = ".comuse-cache";
  std::filesystem::path out_dir = "comuse-out";
  Ratio test_fraction{1, 5};
  std::uint64_t seed = 17;
  unsigned threads = 1;
  EmbedderConfig embedder;
  TrainConfig train;
  GammaSpec gamma;
  std::vector<RunSpec> runs;
};

/* Reads the JSON config described in docs/FORMATS.md. Top-level embedder /
 * svm / gamma settings are defaults; runs may override them. Validates
 * that every part a run references is declared under `data`. */
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct PartSizes {
  std::string part;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::uint64_t split_seed = 0;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/* Everything needed to audit a finished run. Written as JSON next to the
 * run's other outputs. Two runs of the same config differ only under
 * `timings`. */
struct ExperimentManifest {
  std::string run_name;
  std::vector<PartSizes> parts;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::string embedder_fingerprint;
  double gamma = 0.0;
  std::filesystem::path model_file;
  std::filesystem::path metrics_file;
  std::vector<StageTiming> timings;
};
void write_manifest(const ExperimentManifest& manifest,
                    const std::filesystem::path& path);

/* State shared by runs of one experiment: loaded parts, their splits (one
 * split per part, reused by every run) and representation caches. */
class ExperimentContext {
 public:
  explicit ExperimentContext(const ExperimentConfig& config);
  ~ExperimentContext();

  const ExperimentConfig& config() const noexcept { return config_; }
  const SplitPair& split_for(const std::string& part);
  RepresentationCache& cache_for(const Embedder& embedder);

  /* Persists every representation cache touched so far. */
  void save_caches();

 private:
  ExperimentConfig config_;
  std::map<std::string, Dataset> datasets_;
  std::map<std::string, SplitPair> splits_;
  std::map<std::string, std::unique_ptr<RepresentationCache>> caches_;
};

struct RunResult {
  MetricsReport report;
  ExperimentManifest manifest;
};

/* Executes one run end to end: split, embed, train, evaluate, persist.
 * Artifacts land in config.out_dir as <run>.svm, <run>.metrics.csv,
 * <run>.metrics.json and <run>.manifest.json; stale artifacts from an
 * earlier attempt are removed up front. A failing stage throws with the
 * stage name in the message. */
RunResult run(const RunSpec& spec, ExperimentContext& context);

struct RunAllOutcome {
  std::vector<MetricsReport> reports; /* successful runs, config order */
  std::vector<std::pair<std::string, std::string>> failures; /* run, error */
  std::string rendered_report;

  bool all_ok() const noexcept { return failures.empty(); }
};

/* Runs every configured run, collecting per-run failures instead of
 * aborting the batch. The rendered report covers the successful runs and
 * is also written to out_dir as report.md or report.csv. */
RunAllOutcome run_all(const ExperimentConfig& config,
                      ReportFormat format = ReportFormat::Markdown);

/* (De)serialization of one run's metrics, used by the report CLI verb to
 * merge runs produced at different times. */
void write_metrics_json(const MetricsReport& report,
                        const std::filesystem::path& path);
MetricsReport read_metrics_json(const std::filesystem::path& path);

}  // namespace comuse
