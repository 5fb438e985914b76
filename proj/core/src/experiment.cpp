// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "comuse/errors.hpp"
#include "comuse/rng.hpp"
#include "fsutil.hpp"

namespace comuse {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object,
                         std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  for (const auto& item : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::filesystem::path& path) {
  return path.is_absolute() ? path : base_dir / path;
}

EmbedderConfig parse_embedder(const json& object, EmbedderConfig base,
                              const std::filesystem::path& base_dir,
                              const std::string& where) {
  if (!object.is_object()) {
    throw ConfigError(where + " must be an object");
  }
  reject_unknown_keys(object, {"kind", "dim", "seed", "path"}, where);
  if (object.contains("kind")) {
    if (!object["kind"].is_string()) {
      throw ConfigError(where + ".kind must be a string");
    }
    base.kind = object["kind"].get<std::string>();
  }
  if (base.kind != "hash" && base.kind != "precomputed") {
    throw ConfigError(where + ".kind must be \"hash\" or \"precomputed\", got \"" +
                      base.kind + "\"");
  }
  if (object.contains("dim")) {
    if (!object["dim"].is_number_unsigned() || object["dim"] == 0) {
      throw ConfigError(where + ".dim must be a positive integer");
    }
    base.dim = object["dim"].get<std::size_t>();
  }
  if (object.contains("seed")) {
    if (!object["seed"].is_number_unsigned()) {
      throw ConfigError(where + ".seed must be a non-negative integer");
    }
    base.seed = object["seed"].get<std::uint64_t>();
  }
  if (object.contains("path")) {
    if (!object["path"].is_string()) {
      throw ConfigError(where + ".path must be a string");
    }
    base.precomputed_path =
        resolve_path(base_dir, object["path"].get<std::string>());
  }
  if (base.kind == "precomputed" && base.precomputed_path.empty()) {
    throw ConfigError(where + ": a precomputed embedder needs a path");
  }
  return base;
}

double positive_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + " must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v) || v <= 0.0) {
    throw ConfigError(where + " must be finite and positive");
  }
  return v;
}

TrainConfig parse_train(const json& object, TrainConfig base,
                        const std::string& where) {
  if (!object.is_object()) {
    throw ConfigError(where + " must be an object");
  }
  reject_unknown_keys(object,
                      {"c", "tolerance", "max_passes", "max_iters", "seed",
                       "useful_c_scale", "not_useful_c_scale",
                       "kernel_cache_mb"},
                      where);
  if (object.contains("c")) base.c = positive_number(object["c"], where + ".c");
  if (object.contains("tolerance")) {
    base.tolerance = positive_number(object["tolerance"], where + ".tolerance");
  }
  if (object.contains("max_passes")) {
    if (!object["max_passes"].is_number_unsigned() ||
        object["max_passes"] == 0) {
      throw ConfigError(where + ".max_passes must be a positive integer");
    }
    base.max_passes = object["max_passes"].get<int>();
  }
  if (object.contains("max_iters")) {
    if (!object["max_iters"].is_number_unsigned() || object["max_iters"] == 0) {
      throw ConfigError(where + ".max_iters must be a positive integer");
    }
    base.max_iters = object["max_iters"].get<std::int64_t>();
  }
  if (object.contains("seed")) {
    if (!object["seed"].is_number_unsigned()) {
      throw ConfigError(where + ".seed must be a non-negative integer");
    }
    base.seed = object["seed"].get<std::uint64_t>();
  }
  if (object.contains("useful_c_scale")) {
    base.useful_c_scale =
        positive_number(object["useful_c_scale"], where + ".useful_c_scale");
  }
  if (object.contains("not_useful_c_scale")) {
    base.not_useful_c_scale = positive_number(object["not_useful_c_scale"],
                                              where + ".not_useful_c_scale");
  }
  if (object.contains("kernel_cache_mb")) {
    if (!object["kernel_cache_mb"].is_number_unsigned() ||
        object["kernel_cache_mb"] == 0) {
      throw ConfigError(where + ".kernel_cache_mb must be a positive integer");
    }
    base.kernel_cache_mb = object["kernel_cache_mb"].get<std::size_t>();
  }
  return base;
}

GammaSpec parse_gamma(const json& value, const std::string& where) {
  if (value.is_string()) {
    if (value.get<std::string>() != "scale") {
      throw ConfigError(where + " must be \"scale\" or a positive number");
    }
    return GammaSpec{true, 0.0};
  }
  return GammaSpec{false, positive_number(value, where)};
}

void check_run_name(const std::string& name) {
  if (name.empty()) throw ConfigError("run with an empty name");
  if (name.find('/') != std::string::npos ||
      name.find('\\') != std::string::npos) {
    throw ConfigError("run name \"" + name +
                      "\" must not contain path separators");
  }
}

}  // namespace

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.kind == "hash") {
    if (config.dim == 0) {
      throw ConfigError("hash embedder needs a positive dim");
    }
    return hash_embed(config.seed, config.dim);
  }
  if (config.kind == "precomputed") {
    if (config.precomputed_path.empty()) {
      throw ConfigError("precomputed embedder needs a path");
    }
    return load_precomputed(config.precomputed_path);
  }
  throw ConfigError("unknown embedder kind \"" + config.kind + "\"");
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open experiment config: " + path.string());
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::exception& error) {
    throw ConfigError("experiment config " + path.string() +
                      " is not valid JSON: " + error.what());
  }
  if (!parsed.is_object()) {
    throw ConfigError("experiment config must be a JSON object");
  }
  const std::filesystem::path base_dir = path.parent_path();
  const std::string where = "experiment config";
  reject_unknown_keys(parsed,
                      {"data", "cache_dir", "out_dir", "test_fraction", "seed",
                       "threads", "embedder", "svm", "gamma", "runs"},
                      where);

  ExperimentConfig config;
  if (!parsed.contains("data") || !parsed["data"].is_object() ||
      parsed["data"].empty()) {
    throw ConfigError("experiment config needs a non-empty \"data\" object");
  }
  for (const auto& item : parsed["data"].items()) {
    if (!item.value().is_string()) {
      throw ConfigError("data." + item.key() + " must be a path string");
    }
    if (item.key().empty() || item.key().find('/') != std::string::npos ||
        item.key().find('+') != std::string::npos) {
      throw ConfigError("part name \"" + item.key() +
                        "\" must be non-empty and free of '/' and '+'");
    }
    config.data[item.key()] =
        resolve_path(base_dir, item.value().get<std::string>());
  }
  if (parsed.contains("cache_dir")) {
    if (!parsed["cache_dir"].is_string()) {
      throw ConfigError("cache_dir must be a string");
    }
    config.cache_dir =
        resolve_path(base_dir, parsed["cache_dir"].get<std::string>());
  } else {
    config.cache_dir = resolve_path(base_dir, config.cache_dir);
  }
  if (parsed.contains("out_dir")) {
    if (!parsed["out_dir"].is_string()) {
      throw ConfigError("out_dir must be a string");
    }
    config.out_dir =
        resolve_path(base_dir, parsed["out_dir"].get<std::string>());
  } else {
    config.out_dir = resolve_path(base_dir, config.out_dir);
  }
  if (parsed.contains("test_fraction")) {
    if (!parsed["test_fraction"].is_string()) {
      throw ConfigError(
          "test_fraction must be a string such as \"1/5\" or \"0.2\"");
    }
    config.test_fraction =
        Ratio::parse(parsed["test_fraction"].get<std::string>());
  }
  if (parsed.contains("seed")) {
    if (!parsed["seed"].is_number_unsigned()) {
      throw ConfigError("seed must be a non-negative integer");
    }
    config.seed = parsed["seed"].get<std::uint64_t>();
  }
  if (parsed.contains("threads")) {
    if (!parsed["threads"].is_number_unsigned() || parsed["threads"] == 0) {
      throw ConfigError("threads must be a positive integer");
    }
    config.threads = parsed["threads"].get<unsigned>();
  }
  if (parsed.contains("embedder")) {
    config.embedder =
        parse_embedder(parsed["embedder"], config.embedder, base_dir, "embedder");
  }
  if (parsed.contains("svm")) {
    config.train = parse_train(parsed["svm"], config.train, "svm");
  }
  if (parsed.contains("gamma")) {
    config.gamma = parse_gamma(parsed["gamma"], "gamma");
  }

  if (!parsed.contains("runs") || !parsed["runs"].is_array()) {
    throw ConfigError("experiment config needs a \"runs\" array");
  }
  std::set<std::string> run_names;
  for (std::size_t i = 0; i < parsed["runs"].size(); ++i) {
    const auto& entry = parsed["runs"][i];
    const std::string run_where = "runs[" + std::to_string(i) + "]";
    if (!entry.is_object()) {
      throw ConfigError(run_where + " must be an object");
    }
    reject_unknown_keys(entry,
                        {"name", "train", "test", "embedder", "svm", "gamma"},
                        run_where);
    RunSpec spec;
    if (!entry.contains("name") || !entry["name"].is_string()) {
      throw ConfigError(run_where + " needs a string \"name\"");
    }
    spec.name = entry["name"].get<std::string>();
    check_run_name(spec.name);
    if (!run_names.insert(spec.name).second) {
      throw ConfigError("duplicate run name \"" + spec.name + "\"");
    }
    for (const char* side : {"train", "test"}) {
      if (!entry.contains(side) || !entry[side].is_array() ||
          entry[side].empty()) {
        throw ConfigError(run_where + " needs a non-empty \"" +
                          std::string(side) + "\" array of part names");
      }
      auto& parts =
          std::string_view(side) == "train" ? spec.train_parts : spec.test_parts;
      for (const auto& part : entry[side]) {
        if (!part.is_string()) {
          throw ConfigError(run_where + "." + side +
                            " entries must be strings");
        }
        const auto name = part.get<std::string>();
        if (!config.data.count(name)) {
          throw ConfigError(run_where + " references part \"" + name +
                            "\" which is not declared under data");
        }
        parts.push_back(name);
      }
    }
    spec.embedder = entry.contains("embedder")
                        ? parse_embedder(entry["embedder"], config.embedder,
                                         base_dir, run_where + ".embedder")
                        : config.embedder;
    spec.train = entry.contains("svm")
                     ? parse_train(entry["svm"], config.train,
                                   run_where + ".svm")
                     : config.train;
    spec.gamma = entry.contains("gamma")
                     ? parse_gamma(entry["gamma"], run_where + ".gamma")
                     : config.gamma;
    config.runs.push_back(std::move(spec));
  }
  return config;
}

// --- manifest ---

void write_manifest(const ExperimentManifest& manifest,
                    const std::filesystem::path& path) {
  json out;
  out["run_name"] = manifest.run_name;
  out["parts"] = json::array();
  for (const auto& part : manifest.parts) {
    json entry;
    entry["part"] = part.part;
    entry["train_size"] = part.train_size;
    entry["test_size"] = part.test_size;
    entry["split_seed"] = part.split_seed;
    out["parts"].push_back(std::move(entry));
  }
  out["train_size"] = manifest.train_size;
  out["test_size"] = manifest.test_size;
  out["embedder_fingerprint"] = manifest.embedder_fingerprint;
  out["gamma"] = manifest.gamma;
  out["model_file"] = manifest.model_file.string();
  out["metrics_file"] = manifest.metrics_file.string();
  out["timings"] = json::array();
  for (const auto& timing : manifest.timings) {
    json entry;
    entry["stage"] = timing.stage;
    entry["seconds"] = timing.seconds;
    out["timings"].push_back(std::move(entry));
  }
  detail::atomic_write_text(path, out.dump(2) + "\n");
}

// --- context ---

ExperimentContext::ExperimentContext(const ExperimentConfig& config)
    : config_(config) {}

ExperimentContext::~ExperimentContext() = default;

const SplitPair& ExperimentContext::split_for(const std::string& part) {
  auto found = splits_.find(part);
  if (found != splits_.end()) return found->second;

  const auto path = config_.data.find(part);
  if (path == config_.data.end()) {
    throw ConfigError("part \"" + part + "\" is not declared under data");
  }
  Dataset dataset = load_csv(path->second);
  dataset.name = part;
  validate(dataset);
  datasets_.emplace(part, dataset);

  const std::uint64_t split_seed = derive_stream(config_.seed, part);
  auto split = stratified_split(dataset, config_.test_fraction, split_seed);
  return splits_.emplace(part, std::move(split)).first->second;
}

RepresentationCache& ExperimentContext::cache_for(const Embedder& embedder) {
  const std::string fingerprint = embedder.fingerprint();
  auto found = caches_.find(fingerprint);
  if (found != caches_.end()) return *found->second;

  std::error_code ec;
  std::filesystem::create_directories(config_.cache_dir, ec);
  if (ec) {
    throw IoError("cannot create cache directory " + config_.cache_dir.string() +
                  ": " + ec.message());
  }
  auto cache = std::make_unique<RepresentationCache>(
      RepresentationCache::file_for(config_.cache_dir, embedder));
  return *caches_.emplace(fingerprint, std::move(cache)).first->second;
}

void ExperimentContext::save_caches() {
  for (const auto& [fingerprint, cache] : caches_) cache->save();
}

// --- runs ---

namespace {

std::string join_parts(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& part : parts) {
    if (!out.empty()) out.push_back('+');
    out += part;
  }
  return out;
}

std::string upper_copy(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

class StageClock {
 public:
  explicit StageClock(const std::string& run_name) : run_name_(run_name) {}

  template <typename F>
  void stage(const char* name, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const Error& error) {
      throw Error("run " + run_name_ + ", " + name + " stage: " +
                  error.what());
    }
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    timings_.push_back({name, elapsed.count()});
  }

  std::vector<StageTiming> take() { return std::move(timings_); }

 private:
  std::string run_name_;
  std::vector<StageTiming> timings_;
};

}  // namespace

RunResult run(const RunSpec& spec, ExperimentContext& context) {
  check_run_name(spec.name);
  const ExperimentConfig& config = context.config();

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + config.out_dir.string() +
                  ": " + ec.message());
  }
  const auto model_file = config.out_dir / (spec.name + ".svm");
  const auto metrics_csv = config.out_dir / (spec.name + ".metrics.csv");
  const auto metrics_json = config.out_dir / (spec.name + ".metrics.json");
  const auto manifest_file = config.out_dir / (spec.name + ".manifest.json");
  for (const auto& stale : {model_file, metrics_csv, metrics_json,
                            manifest_file}) {
    std::filesystem::remove(stale, ec);
  }

  StageClock clock(spec.name);
  ExperimentManifest manifest;
  manifest.run_name = spec.name;
  manifest.model_file = model_file;
  manifest.metrics_file = metrics_json;

  Dataset train_set, test_set;
  clock.stage("split", [&] {
    std::vector<Dataset> train_halves, test_halves;
    for (const auto& part : spec.train_parts) {
      Dataset half = context.split_for(part).train;
      half.name = part;
      train_halves.push_back(std::move(half));
    }
    for (const auto& part : spec.test_parts) {
      Dataset half = context.split_for(part).test;
      half.name = part;
      test_halves.push_back(std::move(half));
    }
    train_set = combine(train_halves, join_parts(spec.train_parts));
    test_set = combine(test_halves, join_parts(spec.test_parts));

    /* Train and test qualify ids the same way, so a pair present on both
     * sides would collide here. The split makes that impossible; this
     * guards against a regression in the plumbing above. */
    std::unordered_set<std::string> train_ids;
    train_ids.reserve(train_set.pairs.size());
    for (const auto& pair : train_set.pairs) train_ids.insert(pair.id);
    for (const auto& pair : test_set.pairs) {
      if (train_ids.count(pair.id)) {
        throw Error("pair " + pair.id + " appears in both train and test");
      }
    }

    std::set<std::string> seen;
    for (const auto& list : {spec.train_parts, spec.test_parts}) {
      for (const auto& part : list) {
        if (!seen.insert(part).second) continue;
        const SplitPair& split = context.split_for(part);
        manifest.parts.push_back({part, split.train.size(), split.test.size(),
                                  split.seed});
      }
    }
    manifest.train_size = train_set.size();
    manifest.test_size = test_set.size();
  });

  std::unique_ptr<Embedder> embedder;
  std::vector<PairRepresentation> train_reps, test_reps;
  double gamma = 0.0;
  clock.stage("embed", [&] {
    embedder = make_embedder(spec.embedder);
    RepresentationCache& cache = context.cache_for(*embedder);
    train_reps = represent_all(*embedder, train_set, &cache, config.threads);
    test_reps = represent_all(*embedder, test_set, &cache, config.threads);
    if (spec.gamma.scale) {
      gamma = scale_gamma(train_reps);
    } else {
      gamma = spec.gamma.value;
      if (!std::isfinite(gamma) || gamma <= 0.0) {
        throw InvalidArgument("fixed gamma must be finite and positive");
      }
    }
    manifest.embedder_fingerprint = embedder->fingerprint();
    manifest.gamma = gamma;
  });

  SvmModel model;
  clock.stage("train", [&] {
    std::vector<Label> labels;
    labels.reserve(train_set.pairs.size());
    for (const auto& pair : train_set.pairs) labels.push_back(pair.label);
    model = train_smo(train_reps, labels, spec.train, KernelParams{gamma});
    save_model(model, model_file);
  });

  RunResult result;
  clock.stage("evaluate", [&] {
    const auto predictions = predict_batch(model, test_reps, config.threads);
    std::vector<Label> gold;
    gold.reserve(test_set.pairs.size());
    for (const auto& pair : test_set.pairs) gold.push_back(pair.label);
    const auto matrix = confusion(predictions, gold);
    const std::string algorithm = upper_copy(spec.embedder.kind) + ", SVM";
    result.report =
        make_report(spec.name, test_set.name, algorithm, matrix);
    detail::atomic_write_text(
        metrics_csv, render_report({result.report}, ReportFormat::Csv));
    write_metrics_json(result.report, metrics_json);
  });

  manifest.timings = clock.take();
  write_manifest(manifest, manifest_file);
  result.manifest = std::move(manifest);
  return result;
}

RunAllOutcome run_all(const ExperimentConfig& config, ReportFormat format) {
  ExperimentContext context(config);
  RunAllOutcome outcome;
  for (const auto& spec : config.runs) {
    try {
      outcome.reports.push_back(run(spec, context).report);
    } catch (const std::exception& error) {
      outcome.failures.emplace_back(spec.name, error.what());
    }
  }
  context.save_caches();

  outcome.rendered_report = render_report(outcome.reports, format);
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + config.out_dir.string() +
                  ": " + ec.message());
  }
  const auto report_file =
      config.out_dir /
      (format == ReportFormat::Markdown ? "report.md" : "report.csv");
  detail::atomic_write_text(report_file, outcome.rendered_report);
  return outcome;
}

// --- metrics (de)serialization ---

void write_metrics_json(const MetricsReport& report,
                        const std::filesystem::path& path) {
  json out;
  out["run_name"] = report.run_name;
  out["dataset_name"] = report.dataset_name;
  out["algorithm"] = report.algorithm;
  out["matrix"] = {{"tp", report.matrix.tp},
                   {"fp", report.matrix.fp},
                   {"fn", report.matrix.fn},
                   {"tn", report.matrix.tn}};
  out["scores"] = {{"accuracy", report.scores.accuracy},
                   {"precision", report.scores.precision},
                   {"recall", report.scores.recall},
                   {"f1", report.scores.f1}};
  out["useful_test_size"] = report.useful_test_size;
  detail::atomic_write_text(path, out.dump(2) + "\n");
}

MetricsReport read_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics file: " + path.string());
  MetricsReport report;
  try {
    const auto parsed = json::parse(in);
    report.run_name = parsed.at("run_name").get<std::string>();
    report.dataset_name = parsed.at("dataset_name").get<std::string>();
    report.algorithm = parsed.at("algorithm").get<std::string>();
    report.matrix.tp = parsed.at("matrix").at("tp").get<std::uint64_t>();
    report.matrix.fp = parsed.at("matrix").at("fp").get<std::uint64_t>();
    report.matrix.fn = parsed.at("matrix").at("fn").get<std::uint64_t>();
    report.matrix.tn = parsed.at("matrix").at("tn").get<std::uint64_t>();
    report.scores.accuracy = parsed.at("scores").at("accuracy").get<double>();
    report.scores.precision = parsed.at("scores").at("precision").get<double>();
    report.scores.recall = parsed.at("scores").at("recall").get<double>();
    report.scores.f1 = parsed.at("scores").at("f1").get<double>();
    report.useful_test_size =
        parsed.at("useful_test_size").get<std::size_t>();
  } catch (const json::exception& error) {
    throw SchemaError("metrics file " + path.string() +
                      " is malformed: " + error.what());
  }
  return report;
}

}  // namespace comuse
