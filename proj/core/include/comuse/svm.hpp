// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "comuse/corpus.hpp"
#include "comuse/embed.hpp"

namespace comuse {

struct KernelParams {
  double gamma = 1.0; /* must be finite and > 0 */
};

/* exp(-gamma * ||x - y||^2). Throws DimensionError on length mismatch and
 * InvalidArgument when gamma is not finite and positive. */
double rbf_kernel(std::span<const double> x, std::span<const double> y,
                  const KernelParams& params);

/* How a PairRepresentation is laid out. Only one layout exists today; the
 * tag is stored in model files so a future change cannot silently mix. */
enum class RepresentationLayout : std::uint8_t { CodeFirst = 0 };

struct TrainConfig {
  double c = 1.0;          /* box constraint, > 0 */
  double tolerance = 1e-3; /* KKT slack */
  int max_passes = 10;     /* consecutive clean full sweeps to declare done */
  std::int64_t max_iters = 50'000'000; /* safety cap on examine steps */
  std::uint64_t seed = 1;  /* drives heuristic fallback order only */

  /* Per-class scaling of c (cost-sensitive training). 1.0 = plain SMO. */
  double useful_c_scale = 1.0;
  double not_useful_c_scale = 1.0;

  /* Budget for cached kernel rows. Plumbing, not part of the result. */
  std::size_t kernel_cache_mb = 256;
};

struct SvmModel {
  std::vector<std::vector<double>> support_vectors; /* each of length dim */
  std::vector<double> coefficients; /* alpha_i * y_i, all non-zero */
  double bias = 0.0;
  KernelParams kernel;
  std::size_t dim = 0;
  double c = 1.0;
  Label positive_label = Label::Useful;
  RepresentationLayout layout = RepresentationLayout::CodeFirst;
};

/* Sequential minimal optimization with Platt's two working-set heuristics
 * and an error cache over all points. Deterministic for a fixed config.
 *
 * Throws DegenerateTrainingError (fewer than two points or one class),
 * DimensionError (ragged inputs), InvalidArgument (bad config values) and
 * ConvergenceError when max_iters is exhausted.
 *
 * `alpha_out`, when given, receives the final multiplier of every training
 * point (zeros included) in input order; the KKT audit in the tests reads
 * it. */
SvmModel train_smo(const std::vector<PairRepresentation>& inputs,
                   const std::vector<Label>& labels, const TrainConfig& config,
                   const KernelParams& kernel,
                   std::vector<double>* alpha_out = nullptr);

/* sum_i coefficients[i] * K(sv_i, x) + bias, summed in stored order. */
double decision_value(const SvmModel& model, std::span<const double> x);

/* Useful iff decision_value >= 0 (ties go to the positive label). */
Label predict(const SvmModel& model, std::span<const double> x);

std::vector<Label> predict_batch(const SvmModel& model,
                                 const std::vector<PairRepresentation>& inputs,
                                 unsigned threads = 1);

/* Dual objective of the boxed SVM problem evaluated at the model's
 * multipliers: sum |coef| - 1/2 sum_ij coef_i coef_j K(sv_i, sv_j).
 * Points with zero multiplier contribute nothing, so support vectors
 * suffice. */
double dual_objective(const SvmModel& model);

/* Default kernel width: 1 / (dim * variance of all matrix entries), the
 * usual "scale" rule. Falls back to 1 / dim for constant inputs. */
double scale_gamma(const std::vector<PairRepresentation>& inputs);

/* Versioned little-endian binary format with a trailing checksum; see
 * docs/FORMATS.md. save_model writes atomically (temp + rename).
 * load_model throws ModelFormatError on bad magic, unsupported version,
 * truncation or checksum mismatch. */
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace comuse
