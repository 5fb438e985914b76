// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors

/* Command line front end. Every pipeline stage is its own verb so a
 * misbehaving experiment can be rerun one stage at a time. Exit code 0
 * means full success; any failure, including partial augmentation
 * failures, exits nonzero. */

#include <cctype>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "comuse/augment.hpp"
#include "comuse/chat_client.hpp"
#include "comuse/corpus.hpp"
#include "comuse/embed.hpp"
#include "comuse/errors.hpp"
#include "comuse/eval.hpp"
#include "comuse/experiment.hpp"
#include "comuse/svm.hpp"

namespace {

using namespace comuse;

struct EmbedderFlags {
  std::string kind = "hash";
  std::size_t dim = 200;
  std::uint64_t seed = 7;
  std::string precomputed_path;
};

void add_embedder_flags(CLI::App* cmd, EmbedderFlags& flags) {
  cmd->add_option("--embedder", flags.kind, "Embedding backend")
      ->check(CLI::IsMember({"hash", "precomputed"}))
      ->capture_default_str();
  cmd->add_option("--dim", flags.dim, "Per-token embedding width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--embed-seed", flags.seed, "Hash embedder seed")
      ->capture_default_str();
  cmd->add_option("--embedder-path", flags.precomputed_path,
                  "Exported embedding file (precomputed backend)");
}

std::unique_ptr<Embedder> build_embedder(const EmbedderFlags& flags) {
  EmbedderConfig config;
  config.kind = flags.kind;
  config.dim = flags.dim;
  config.seed = flags.seed;
  config.precomputed_path = flags.precomputed_path;
  return make_embedder(config);
}

std::string algorithm_name(const EmbedderFlags& flags) {
  std::string kind = flags.kind;
  for (auto& c : kind) c = static_cast<char>(std::toupper(c));
  return kind + ", SVM";
}

double resolve_gamma(const std::string& text,
                     const std::vector<PairRepresentation>& reps) {
  if (text == "scale") return scale_gamma(reps);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ConfigError("--gamma must be \"scale\" or a positive number, got \"" +
                      text + "\"");
  }
  if (!(value > 0.0)) {
    throw ConfigError("--gamma must be positive, got " + text);
  }
  return value;
}

ReportFormat parse_format(const std::string& text) {
  return text == "csv" ? ReportFormat::Csv : ReportFormat::Markdown;
}

std::vector<Label> labels_of(const Dataset& dataset) {
  std::vector<Label> labels;
  labels.reserve(dataset.size());
  for (const auto& pair : dataset.pairs) labels.push_back(pair.label);
  return labels;
}

/* Builds the chat client the augment verb talks to: replay-only from the
 * response cache, or a live endpoint (environment-configured) recording
 * into the same cache. */
std::unique_ptr<ChatClient> build_chat_client(
    const std::filesystem::path& cache_dir, bool replay) {
  auto cache = std::make_shared<ResponseCache>(cache_dir / "responses");
  if (replay) return std::make_unique<ReplayChatClient>(std::move(cache));
  auto endpoint = ChatEndpoint::from_env();
  const std::string model = endpoint.model;
  return std::make_unique<CachingChatClient>(
      std::make_shared<HttpChatClient>(std::move(endpoint)), std::move(cache),
      model);
}

int cmd_ingest(const std::string& input, const std::string& output,
               const std::string& name) {
  Dataset dataset = load_csv(input);
  if (!name.empty()) dataset.name = name;
  validate(dataset);
  write_csv(dataset, output);
  const auto counts = class_counts(dataset);
  std::printf("%zu pairs (%zu useful, %zu not useful) -> %s\n", dataset.size(),
              counts.useful, counts.not_useful, output.c_str());
  return 0;
}

int cmd_split(const std::string& input, const std::string& fraction,
              std::uint64_t seed, std::string train_out, std::string test_out,
              const std::string& manifest) {
  const auto dataset = load_csv(input);
  const auto split = stratified_split(dataset, Ratio::parse(fraction), seed);
  const auto stem = std::filesystem::path(input).stem().string();
  if (train_out.empty()) train_out = stem + ".train.csv";
  if (test_out.empty()) test_out = stem + ".test.csv";
  write_csv(split.train, train_out);
  write_csv(split.test, test_out);
  if (!manifest.empty()) write_split_manifest(split, manifest);
  const auto train_counts = class_counts(split.train);
  const auto test_counts = class_counts(split.test);
  std::printf("train %zu (%zu/%zu) -> %s\n", split.train.size(),
              train_counts.useful, train_counts.not_useful, train_out.c_str());
  std::printf("test  %zu (%zu/%zu) -> %s\n", split.test.size(),
              test_counts.useful, test_counts.not_useful, test_out.c_str());
  return 0;
}

int cmd_derange(const std::string& input, const std::string& output,
                std::uint64_t seed) {
  auto dataset = load_csv(input);
  dataset.pairs = derange_comments(std::move(dataset.pairs), seed);
  dataset.name += "-deranged";
  write_csv(dataset, output);
  std::printf("%zu deranged pairs -> %s\n", dataset.size(), output.c_str());
  return 0;
}

int cmd_augment_llm(const std::string& input, const std::string& output,
                    const std::string& op, const std::string& prompts_path,
                    const std::filesystem::path& cache_dir, bool replay,
                    const std::string& provenance, unsigned parallelism,
                    std::uint64_t seed, std::size_t useful_sample,
                    std::size_t not_useful_sample) {
  const auto dataset = load_csv(input);
  const auto prompts = prompts_path.empty() ? PromptLibrary::defaults()
                                            : PromptLibrary::load(prompts_path);
  const auto client = build_chat_client(cache_dir, replay);
  ProvenanceLog log = provenance.empty()
                          ? ProvenanceLog()
                          : ProvenanceLog(std::filesystem::path(provenance));

  std::vector<AugmentFailure> failures;
  if (op == "label") {
    auto result =
        llm_label_dataset(dataset, *client, prompts.label_query, log,
                          parallelism);
    failures = std::move(result.failures);
    write_csv(result.dataset, output);
    std::printf("%zu labeled pairs -> %s\n", result.dataset.size(),
                output.c_str());
  } else {
    ExtraGenConfig config;
    config.useful_sample = useful_sample;
    config.not_useful_sample = not_useful_sample;
    config.parallelism = parallelism;
    auto result =
        build_extra_generated(dataset, *client, seed, prompts, log, config);
    failures = std::move(result.failures);
    write_csv(result.dataset, output);
    std::printf("%zu generated pairs -> %s\n", result.dataset.size(),
                output.c_str());
  }
  for (const auto& failure : failures) {
    std::fprintf(stderr, "failed: %s: %s\n", failure.pair_id.c_str(),
                 failure.reason.c_str());
  }
  return failures.empty() ? 0 : 1;
}

int cmd_embed(const std::string& input, const EmbedderFlags& flags,
              const std::filesystem::path& cache_dir, unsigned threads) {
  const auto dataset = load_csv(input);
  const auto embedder = build_embedder(flags);
  std::filesystem::create_directories(cache_dir);
  RepresentationCache cache(
      RepresentationCache::file_for(cache_dir, *embedder));
  const std::size_t before = cache.size();
  represent_all(*embedder, dataset, &cache, threads);
  cache.save();
  std::printf("%zu representations (%zu new) dim %zu -> %s\n", cache.size(),
              cache.size() - before, 2 * embedder->dim(),
              cache.file().string().c_str());
  return 0;
}

int cmd_train(const std::string& input, const std::string& model_out,
              const EmbedderFlags& flags, const std::string& gamma_text,
              TrainConfig config, const std::filesystem::path& cache_dir,
              unsigned threads) {
  const auto dataset = load_csv(input);
  const auto embedder = build_embedder(flags);
  std::unique_ptr<RepresentationCache> cache;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    cache = std::make_unique<RepresentationCache>(
        RepresentationCache::file_for(cache_dir, *embedder));
  }
  const auto reps = represent_all(*embedder, dataset, cache.get(), threads);
  if (cache) cache->save();

  const KernelParams kernel{resolve_gamma(gamma_text, reps)};
  const auto model = train_smo(reps, labels_of(dataset), config, kernel);
  save_model(model, model_out);
  std::printf("%zu support vectors of %zu points, gamma %.6g, bias %.6g -> %s\n",
              model.support_vectors.size(), dataset.size(), kernel.gamma,
              model.bias, model_out.c_str());
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& test_path,
                 const EmbedderFlags& flags, const std::string& format,
                 const std::string& run_name, const std::string& metrics_out,
                 const std::filesystem::path& cache_dir, unsigned threads) {
  const auto model = load_model(model_path);
  const auto dataset = load_csv(test_path);
  const auto embedder = build_embedder(flags);
  if (2 * embedder->dim() != model.dim) {
    throw DimensionError("embedder yields " +
                         std::to_string(2 * embedder->dim()) +
                         "-wide representations but the model expects " +
                         std::to_string(model.dim));
  }
  std::unique_ptr<RepresentationCache> cache;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    cache = std::make_unique<RepresentationCache>(
        RepresentationCache::file_for(cache_dir, *embedder));
  }
  const auto reps = represent_all(*embedder, dataset, cache.get(), threads);
  if (cache) cache->save();

  const auto predictions = predict_batch(model, reps, threads);
  const auto matrix = confusion(predictions, labels_of(dataset));
  const auto report =
      make_report(run_name.empty() ? dataset.name : run_name, dataset.name,
                  algorithm_name(flags), matrix);
  std::fputs(render_report({report}, parse_format(format)).c_str(), stdout);
  if (!metrics_out.empty()) write_metrics_json(report, metrics_out);
  return 0;
}

int cmd_run_all(const std::string& config_path, const std::string& format,
                const std::string& cache_dir_override,
                const std::string& out_dir_override, std::uint64_t seed,
                bool seed_given, unsigned threads, bool threads_given) {
  auto config = load_experiment_config(config_path);
  if (!cache_dir_override.empty()) config.cache_dir = cache_dir_override;
  if (!out_dir_override.empty()) config.out_dir = out_dir_override;
  if (seed_given) config.seed = seed;
  if (threads_given) config.threads = threads;

  const auto outcome = run_all(config, parse_format(format));
  std::fputs(outcome.rendered_report.c_str(), stdout);
  for (const auto& [run, error] : outcome.failures) {
    std::fprintf(stderr, "run %s failed: %s\n", run.c_str(), error.c_str());
  }
  return outcome.all_ok() ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& metric_files,
               const std::string& format) {
  std::vector<MetricsReport> reports;
  reports.reserve(metric_files.size());
  for (const auto& file : metric_files) {
    reports.push_back(read_metrics_json(file));
  }
  std::fputs(render_report(reports, parse_format(format)).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code-comment usefulness pipeline"};
  app.require_subcommand(1);

  std::string input, output, name, fraction = "1/5", manifest;
  std::string train_out, test_out;
  std::string format = "markdown", run_name, metrics_out;
  std::string gamma_text = "scale", config_path, cache_dir, out_dir;
  std::string op = "label", prompts_path, provenance, model_path;
  std::vector<std::string> metric_files;
  std::uint64_t seed = 17;
  unsigned threads = 1, parallelism = 1;
  bool replay = false;
  std::size_t useful_sample = 250, not_useful_sample = 250;
  EmbedderFlags embedder_flags;
  TrainConfig train_config;

  const auto add_format = [&format](CLI::App* cmd) {
    cmd->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"markdown", "csv"}))
        ->capture_default_str();
  };
  const auto add_cache_dir = [&cache_dir](CLI::App* cmd, const char* help) {
    cmd->add_option("--cache-dir", cache_dir, help);
  };

  auto* ingest = app.add_subcommand(
      "ingest", "Validate a CSV dataset and rewrite it in canonical form");
  ingest->add_option("input", input, "Dataset CSV")->required();
  ingest->add_option("output", output, "Canonical CSV")->required();
  ingest->add_option("--name", name, "Dataset name to record");

  auto* split = app.add_subcommand(
      "split", "Stratified train/test split with exact per-class floors");
  split->add_option("input", input, "Dataset CSV")->required();
  split->add_option("--fraction", fraction, "Test share, e.g. 1/5 or 0.2")
      ->capture_default_str();
  split->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
  split->add_option("--train-out", train_out, "Train CSV (default <stem>.train.csv)");
  split->add_option("--test-out", test_out, "Test CSV (default <stem>.test.csv)");
  split->add_option("--manifest", manifest, "Split manifest JSON");

  auto* augment =
      app.add_subcommand("augment", "Dataset augmentation operations");
  augment->require_subcommand(1);
  auto* derange = augment->add_subcommand(
      "derange", "Replace every comment with another pair's comment");
  derange->add_option("input", input, "Dataset CSV")->required();
  derange->add_option("output", output, "Deranged CSV")->required();
  derange->add_option("--seed", seed, "Derangement seed")->capture_default_str();

  auto* llm = augment->add_subcommand(
      "llm", "Label or extend a dataset through a chat endpoint");
  llm->add_option("input", input, "Dataset CSV")->required();
  llm->add_option("output", output, "Augmented CSV")->required();
  llm->add_option("--op", op, "label: relabel every pair; extra: build the derange+generate balance set")
      ->check(CLI::IsMember({"label", "extra"}))
      ->capture_default_str();
  llm->add_option("--prompts", prompts_path, "Prompt library JSON (built-in defaults otherwise)");
  add_cache_dir(llm, "Response cache directory");
  llm->add_flag("--replay", replay,
                "Serve entirely from the response cache, never the network");
  llm->add_option("--provenance", provenance, "Provenance JSONL output");
  llm->add_option("--parallelism", parallelism, "Concurrent requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  llm->add_option("--seed", seed, "Sampling seed (extra op)")
      ->capture_default_str();
  llm->add_option("--useful-sample", useful_sample,
                  "Useful pairs to derange (extra op)")
      ->capture_default_str();
  llm->add_option("--not-useful-sample", not_useful_sample,
                  "Not Useful codes to re-comment (extra op)")
      ->capture_default_str();

  auto* embed = app.add_subcommand(
      "embed", "Compute representations and persist them to the cache");
  embed->add_option("input", input, "Dataset CSV")->required();
  add_embedder_flags(embed, embedder_flags);
  add_cache_dir(embed, "Representation cache directory");
  embed->add_option("--threads", threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "Train an SVM on a dataset CSV");
  train->add_option("input", input, "Training CSV")->required();
  train->add_option("model", output, "Model file to write")->required();
  add_embedder_flags(train, embedder_flags);
  train->add_option("--c", train_config.c, "Box constraint")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--tolerance", train_config.tolerance, "KKT slack")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--gamma", gamma_text, "Kernel width: \"scale\" or a number")
      ->capture_default_str();
  train->add_option("--max-passes", train_config.max_passes,
                    "Clean full sweeps before converged")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--seed", train_config.seed, "Working-set fallback seed")
      ->capture_default_str();
  train->add_option("--useful-c-scale", train_config.useful_c_scale,
                    "Per-class C multiplier, Useful side")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--not-useful-c-scale", train_config.not_useful_c_scale,
                    "Per-class C multiplier, Not Useful side")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_cache_dir(train, "Representation cache directory (optional)");
  train->add_option("--threads", threads, "Embedding threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a trained model against a labeled test CSV");
  evaluate->add_option("model", model_path, "Model file")->required();
  evaluate->add_option("test", input, "Test CSV")->required();
  add_embedder_flags(evaluate, embedder_flags);
  add_format(evaluate);
  evaluate->add_option("--run-name", run_name, "Row label in the report");
  evaluate->add_option("--metrics-out", metrics_out, "Metrics JSON output");
  add_cache_dir(evaluate, "Representation cache directory (optional)");
  evaluate->add_option("--threads", threads, "Embedding/prediction threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* run_all_cmd = app.add_subcommand(
      "run-all", "Execute every run in an experiment config");
  run_all_cmd->add_option("--config", config_path, "Experiment JSON")
      ->required();
  add_format(run_all_cmd);
  auto* run_seed =
      run_all_cmd->add_option("--seed", seed, "Override the config seed");
  add_cache_dir(run_all_cmd, "Override the config cache_dir");
  run_all_cmd->add_option("--out-dir", out_dir, "Override the config out_dir");
  auto* run_threads = run_all_cmd
                          ->add_option("--threads", threads,
                                       "Override the config thread count")
                          ->check(CLI::PositiveNumber);

  auto* report_cmd = app.add_subcommand(
      "report", "Render a combined report from metrics JSON files");
  report_cmd->add_option("metrics", metric_files, "Metrics JSON files")
      ->required()
      ->expected(-1);
  add_format(report_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(input, output, name);
    if (split->parsed()) {
      return cmd_split(input, fraction, seed, train_out, test_out, manifest);
    }
    if (derange->parsed()) return cmd_derange(input, output, seed);
    if (llm->parsed()) {
      return cmd_augment_llm(input, output, op, prompts_path,
                             cache_dir.empty() ? ".comuse-cache" : cache_dir,
                             replay, provenance, parallelism, seed,
                             useful_sample, not_useful_sample);
    }
    if (embed->parsed()) {
      return cmd_embed(input, embedder_flags,
                       cache_dir.empty() ? ".comuse-cache" : cache_dir,
                       threads);
    }
    if (train->parsed()) {
      return cmd_train(input, output, embedder_flags, gamma_text, train_config,
                       cache_dir, threads);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(model_path, input, embedder_flags, format, run_name,
                          metrics_out, cache_dir, threads);
    }
    if (run_all_cmd->parsed()) {
      return cmd_run_all(config_path, format, cache_dir, out_dir, seed,
                         run_seed->count() > 0, threads,
                         run_threads->count() > 0);
    }
    if (report_cmd->parsed()) return cmd_report(metric_files, format);
  } catch (const Error& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  }
  return 0;
}
