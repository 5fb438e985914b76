// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#include "comuse/svm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <list>
#include <thread>
#include <unordered_map>

#include "comuse/errors.hpp"
#include "comuse/hash.hpp"
#include "comuse/rng.hpp"
#include "fsutil.hpp"

namespace comuse {

namespace {

void check_gamma(double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0) {
    throw InvalidArgument("kernel gamma must be finite and positive");
  }
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> y,
                  const KernelParams& params) {
  check_gamma(params.gamma);
  if (x.size() != y.size()) {
    throw DimensionError("rbf_kernel: " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + " dimensions");
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    d2 += diff * diff;
  }
  return std::exp(-params.gamma * d2);
}

double scale_gamma(const std::vector<PairRepresentation>& inputs) {
  if (inputs.empty() || inputs[0].empty()) {
    throw InvalidArgument("scale_gamma needs at least one non-empty input");
  }
  const std::size_t dim = inputs[0].size();
  std::size_t count = 0;
  double mean = 0.0;
  for (const auto& row : inputs) {
    if (row.size() != dim) {
      throw DimensionError("scale_gamma: ragged inputs");
    }
    for (double v : row) {
      mean += v;
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  double variance = 0.0;
  for (const auto& row : inputs) {
    for (double v : row) {
      const double centered = v - mean;
      variance += centered * centered;
    }
  }
  variance /= static_cast<double>(count);
  if (variance < 1e-300) {
    return 1.0 / static_cast<double>(dim);
  }
  return 1.0 / (static_cast<double>(dim) * variance);
}

// --- training ---

namespace {

/* Platt-style sequential minimal optimization.
 *
 * State: one error cache entry per training point (E_i = f(x_i) - y_i,
 * bias included), kept exact by updating every entry after each accepted
 * step; an LRU cache of kernel rows bounds memory. All candidate scans are
 * index-ordered and the only randomness is the seeded fallback offset, so
 * a fixed config trains identically everywhere. */
class SmoSolver {
 public:
  SmoSolver(const std::vector<PairRepresentation>& inputs,
            std::vector<double> y, std::vector<double> c, double gamma,
            const TrainConfig& config)
      : n_(inputs.size()),
        dim_(inputs[0].size()),
        y_(std::move(y)),
        c_(std::move(c)),
        gamma_(gamma),
        tol_(config.tolerance),
        max_passes_(config.max_passes),
        max_iters_(config.max_iters),
        rng_(derive_stream(config.seed, "smo-fallback")),
        alpha_(n_, 0.0),
        error_(n_) {
    flat_.resize(n_ * dim_);
    sq_norm_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double v = inputs[i][k];
        flat_[i * dim_ + k] = v;
        sq += v * v;
      }
      sq_norm_[i] = sq;
    }
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];

    const std::size_t row_bytes = n_ * sizeof(double);
    max_cached_rows_ = std::max<std::size_t>(
        2, config.kernel_cache_mb * std::size_t(1024 * 1024) / row_bytes);
  }

  void solve() {
    bool examine_all = true;
    int clean_full_sweeps = 0;
    while (clean_full_sweeps < max_passes_) {
      std::size_t changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
        if (changed == 0) {
          ++clean_full_sweeps;
        } else {
          clean_full_sweeps = 0;
          examine_all = false;
        }
      } else {
        for (std::size_t i = 0; i < n_; ++i) {
          if (is_free(i)) changed += examine(i);
        }
        if (changed == 0) examine_all = true;
      }
    }
  }

  /* Bias recomputed from the converged state: mean of y_i - g_i over free
   * support vectors, else the midpoint of the interval the bound points
   * leave feasible. If that recentering were ever worse than the running
   * threshold, the running value wins; KKT slack never degrades. */
  double final_bias() {
    double candidate;
    bool any_free = false;
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (is_free(i)) {
        free_sum += y_[i] - g(i);
        ++free_count;
        any_free = true;
      }
    }
    if (any_free) {
      candidate = free_sum / static_cast<double>(free_count);
    } else {
      double lower = -std::numeric_limits<double>::infinity();
      double upper = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n_; ++i) {
        const double gi = g(i);
        const bool positive = y_[i] > 0.0;
        const bool at_zero = alpha_[i] == 0.0;
        if (positive == at_zero) {
          lower = std::max(lower, (positive ? 1.0 : -1.0) - gi);
        } else {
          upper = std::min(upper, (positive ? 1.0 : -1.0) - gi);
        }
      }
      if (!std::isfinite(lower)) candidate = upper;
      else if (!std::isfinite(upper)) candidate = lower;
      else candidate = 0.5 * (lower + upper);
    }
    return max_violation(candidate) <= max_violation(b_) ? candidate : b_;
  }

  const std::vector<double>& alpha() const noexcept { return alpha_; }

  double dual_objective_now() {
    double linear = 0.0, quad = 0.0;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] > 0.0) active.push_back(i);
    }
    for (std::size_t a : active) {
      linear += alpha_[a];
      for (std::size_t b : active) {
        quad += alpha_[a] * alpha_[b] * y_[a] * y_[b] * kernel(a, b);
      }
    }
    return linear - 0.5 * quad;
  }

 private:
  bool is_free(std::size_t i) const noexcept {
    return alpha_[i] > 0.0 && alpha_[i] < c_[i];
  }

  /* f(x_i) without the bias, from the error cache. */
  double g(std::size_t i) const noexcept { return error_[i] + y_[i] - b_; }

  double max_violation(double bias) const noexcept {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double margin = y_[i] * (g(i) + bias);
      if (alpha_[i] == 0.0) {
        worst = std::max(worst, 1.0 - margin);
      } else if (alpha_[i] == c_[i]) {
        worst = std::max(worst, margin - 1.0);
      } else {
        worst = std::max(worst, std::abs(margin - 1.0));
      }
    }
    return worst;
  }

  double dot(std::size_t i, std::size_t j) const noexcept {
    const double* a = flat_.data() + i * dim_;
    const double* b = flat_.data() + j * dim_;
    double sum = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) sum += a[k] * b[k];
    return sum;
  }

  double kernel(std::size_t i, std::size_t j) const noexcept {
    if (i == j) return 1.0;
    const double d2 = sq_norm_[i] + sq_norm_[j] - 2.0 * dot(i, j);
    return std::exp(-gamma_ * std::max(d2, 0.0));
  }

  /* Cached kernel row. References stay valid for the two most recently
   * fetched rows (the cache holds at least two); take_step relies on it. */
  const std::vector<double>& row(std::size_t i) {
    auto it = row_cache_.find(i);
    if (it != row_cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.position);
      return it->second.values;
    }
    std::vector<double> values(n_);
    for (std::size_t j = 0; j < n_; ++j) values[j] = kernel(i, j);
    lru_.push_front(i);
    auto& slot = row_cache_[i];
    slot.values = std::move(values);
    slot.position = lru_.begin();
    while (row_cache_.size() > max_cached_rows_) {
      row_cache_.erase(lru_.back());
      lru_.pop_back();
    }
    return row_cache_[i].values;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double alph1 = alpha_[i1], alph2 = alpha_[i2];
    const double y1 = y_[i1], y2 = y_[i2];
    const double e1 = error_[i1], e2 = error_[i2];
    const double c1 = c_[i1], c2 = c_[i2];
    const double s = y1 * y2;

    double low, high;
    if (s < 0.0) {
      low = std::max(0.0, alph2 - alph1);
      high = std::min(c2, c1 + alph2 - alph1);
    } else {
      low = std::max(0.0, alph1 + alph2 - c1);
      high = std::min(c2, alph1 + alph2);
    }
    if (low >= high) return false;

    const double k12 = kernel(i1, i2);
    const double k11 = 1.0, k22 = 1.0; /* RBF diagonal */
    const double eta = k11 + k22 - 2.0 * k12;

    double a2;
    if (eta > 1e-15) {
      a2 = alph2 + y2 * (e1 - e2) / eta;
      a2 = std::min(std::max(a2, low), high);
    } else {
      /* Flat direction (co-located points): move to whichever segment end
       * lowers the objective, if either does. */
      const double g1 = e1 + y1 - b_;
      const double g2 = e2 + y2 - b_;
      const double v1 = g1 - y1 * alph1 * k11 - y2 * alph2 * k12;
      const double v2 = g2 - y1 * alph1 * k12 - y2 * alph2 * k22;
      const auto objective = [&](double a2v) {
        const double a1v = alph1 + s * (alph2 - a2v);
        return 0.5 * (k11 * a1v * a1v + k22 * a2v * a2v) +
               s * k12 * a1v * a2v + y1 * a1v * v1 + y2 * a2v * v2 - a1v - a2v;
      };
      const double at_low = objective(low);
      const double at_high = objective(high);
      if (at_low < at_high - 1e-12) {
        a2 = low;
      } else if (at_high < at_low - 1e-12) {
        a2 = high;
      } else {
        return false;
      }
    }

    if (a2 < 1e-8 * c2) a2 = 0.0;
    else if (a2 > c2 * (1.0 - 1e-8)) a2 = c2;
    if (std::abs(a2 - alph2) < 1e-12 * (a2 + alph2 + 1e-12)) return false;

    double a1 = alph1 + s * (alph2 - a2);
    if (a1 < 1e-8 * c1) a1 = 0.0;
    else if (a1 > c1 * (1.0 - 1e-8)) a1 = c1;

    const double delta1 = a1 - alph1;
    const double delta2 = a2 - alph2;

    /* Threshold that puts the stepped point exactly on the margin. With
     * the bias added into f, that is b - E_new_without_bias_change, i.e.
     * the sign of every term flips relative to the subtracted-bias form. */
    const double b1 = b_ - e1 - y1 * delta1 * k11 - y2 * delta2 * k12;
    const double b2 = b_ - e2 - y1 * delta1 * k12 - y2 * delta2 * k22;
    double b_new;
    if (a1 > 0.0 && a1 < c1) b_new = b1;
    else if (a2 > 0.0 && a2 < c2) b_new = b2;
    else b_new = 0.5 * (b1 + b2);

    const std::vector<double>& row1 = row(i1);
    const std::vector<double>& row2 = row(i2);
    const double shift = b_new - b_;
    for (std::size_t k = 0; k < n_; ++k) {
      error_[k] += y1 * delta1 * row1[k] + y2 * delta2 * row2[k] + shift;
    }
    alpha_[i1] = a1;
    alpha_[i2] = a2;
    b_ = b_new;
    return true;
  }

  std::size_t examine(std::size_t i2) {
    if (++examine_count_ > max_iters_) {
      throw ConvergenceError(
          "smo hit the iteration cap (" + std::to_string(max_iters_) +
              " examine steps) before satisfying the stopping rule",
          dual_objective_now());
    }
    const double y2 = y_[i2];
    const double alph2 = alpha_[i2];
    const double e2 = error_[i2];
    const double r2 = e2 * y2;
    const bool violated =
        (r2 < -tol_ && alph2 < c_[i2]) || (r2 > tol_ && alph2 > 0.0);
    if (!violated) return 0;

    /* 1: the free point with the largest |E1 - E2|. */
    double best_gap = -1.0;
    std::size_t best = n_;
    for (std::size_t j = 0; j < n_; ++j) {
      if (!is_free(j) || j == i2) continue;
      const double gap = std::abs(error_[j] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best < n_ && take_step(best, i2)) return 1;

    /* 2: any free point, from a random start. */
    std::size_t offset = rng_.next_below(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t j = (k + offset) % n_;
      if (is_free(j) && take_step(j, i2)) return 1;
    }
    /* 3: anything, from a random start. */
    offset = rng_.next_below(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t j = (k + offset) % n_;
      if (take_step(j, i2)) return 1;
    }
    return 0;
  }

  std::size_t n_;
  std::size_t dim_;
  std::vector<double> y_;
  std::vector<double> c_;
  double gamma_;
  double tol_;
  int max_passes_;
  std::int64_t max_iters_;
  SplitMix64 rng_;

  std::vector<double> flat_;
  std::vector<double> sq_norm_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  double b_ = 0.0;
  std::int64_t examine_count_ = 0;

  struct CachedRow {
    std::vector<double> values;
    std::list<std::size_t>::iterator position;
  };
  std::unordered_map<std::size_t, CachedRow> row_cache_;
  std::list<std::size_t> lru_;
  std::size_t max_cached_rows_ = 2;
};

}  // namespace

SvmModel train_smo(const std::vector<PairRepresentation>& inputs,
                   const std::vector<Label>& labels, const TrainConfig& config,
                   const KernelParams& kernel,
                   std::vector<double>* alpha_out) {
  if (labels.size() != inputs.size()) {
    throw DimensionError("train_smo: " + std::to_string(inputs.size()) +
                         " inputs vs " + std::to_string(labels.size()) +
                         " labels");
  }
  if (inputs.size() < 2) {
    throw DegenerateTrainingError("training needs at least two points");
  }
  const std::size_t dim = inputs[0].size();
  if (dim == 0) throw DimensionError("train_smo: zero-dimensional inputs");
  for (const auto& row : inputs) {
    if (row.size() != dim) throw DimensionError("train_smo: ragged inputs");
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("train_smo: non-finite input value");
      }
    }
  }
  check_gamma(kernel.gamma);
  if (!std::isfinite(config.c) || config.c <= 0.0) {
    throw InvalidArgument("train_smo: c must be finite and positive");
  }
  if (!std::isfinite(config.tolerance) || config.tolerance <= 0.0) {
    throw InvalidArgument("train_smo: tolerance must be finite and positive");
  }
  if (config.max_passes < 1) {
    throw InvalidArgument("train_smo: max_passes must be at least 1");
  }
  if (config.max_iters < 1) {
    throw InvalidArgument("train_smo: max_iters must be at least 1");
  }
  if (!std::isfinite(config.useful_c_scale) || config.useful_c_scale <= 0.0 ||
      !std::isfinite(config.not_useful_c_scale) ||
      config.not_useful_c_scale <= 0.0) {
    throw InvalidArgument("train_smo: per-class c scales must be positive");
  }

  std::vector<double> y(inputs.size());
  std::vector<double> c(inputs.size());
  bool any_positive = false, any_negative = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool useful = labels[i] == Label::Useful;
    y[i] = useful ? 1.0 : -1.0;
    c[i] = config.c * (useful ? config.useful_c_scale : config.not_useful_c_scale);
    any_positive |= useful;
    any_negative |= !useful;
  }
  if (!any_positive || !any_negative) {
    throw DegenerateTrainingError("training set holds a single class");
  }

  SmoSolver solver(inputs, std::move(y), std::move(c), kernel.gamma, config);
  solver.solve();

  SvmModel model;
  model.bias = solver.final_bias();
  model.kernel = kernel;
  model.dim = dim;
  model.c = config.c;
  const auto& alpha = solver.alpha();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (alpha[i] > 0.0) {
      model.support_vectors.push_back(inputs[i]);
      const double sign = labels[i] == Label::Useful ? 1.0 : -1.0;
      model.coefficients.push_back(alpha[i] * sign);
    }
  }
  if (model.support_vectors.empty()) {
    throw TrainingError("optimizer returned no support vectors");
  }
  if (alpha_out) *alpha_out = alpha;
  return model;
}

double decision_value(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim) {
    throw DimensionError("decision_value: query of dimension " +
                         std::to_string(x.size()) + ", model expects " +
                         std::to_string(model.dim));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    sum += model.coefficients[i] *
           rbf_kernel(model.support_vectors[i], x, model.kernel);
  }
  return sum + model.bias;
}

Label predict(const SvmModel& model, std::span<const double> x) {
  const Label negative = model.positive_label == Label::Useful
                             ? Label::NotUseful
                             : Label::Useful;
  return decision_value(model, x) >= 0.0 ? model.positive_label : negative;
}

std::vector<Label> predict_batch(const SvmModel& model,
                                 const std::vector<PairRepresentation>& inputs,
                                 unsigned threads) {
  std::vector<Label> out(inputs.size());
  if (threads <= 1 || inputs.size() < 2) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      out[i] = predict(model, inputs[i]);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  const unsigned worker_count =
      static_cast<unsigned>(std::min<std::size_t>(threads, inputs.size()));
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (unsigned w = 0; w < worker_count; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= inputs.size()) return;
        out[i] = predict(model, inputs[i]);
      }
    });
  }
  for (auto& worker : workers) worker.join();
  return out;
}

double dual_objective(const SvmModel& model) {
  double linear = 0.0, quad = 0.0;
  const std::size_t count = model.coefficients.size();
  for (std::size_t i = 0; i < count; ++i) {
    linear += std::abs(model.coefficients[i]);
    for (std::size_t j = 0; j < count; ++j) {
      quad += model.coefficients[i] * model.coefficients[j] *
              rbf_kernel(model.support_vectors[i], model.support_vectors[j],
                         model.kernel);
    }
  }
  return linear - 0.5 * quad;
}

// --- persistence ---

namespace {

constexpr char kModelMagic[8] = {'C', 'O', 'M', 'U', 'S', 'V', 'M', '\0'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(
        (static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  put_le(out, bits);
}

class ModelReader {
 public:
  ModelReader(const std::string& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

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
    const auto bits = get_le<std::uint64_t>();
    double value;
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
      throw ModelFormatError("truncated model file " + path_.string());
    }
  }
  const std::string& data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  if (model.support_vectors.size() != model.coefficients.size()) {
    throw InvalidArgument("model has " +
                          std::to_string(model.support_vectors.size()) +
                          " support vectors for " +
                          std::to_string(model.coefficients.size()) +
                          " coefficients");
  }
  std::string out;
  out.append(kModelMagic, sizeof kModelMagic);
  put_le(out, kModelVersion);
  out.push_back(static_cast<char>(model.layout));
  out.push_back(static_cast<char>(model.positive_label));
  put_le(out, static_cast<std::uint16_t>(0)); /* reserved */
  put_le(out, static_cast<std::uint32_t>(model.dim));
  put_f64(out, model.kernel.gamma);
  put_f64(out, model.c);
  put_f64(out, model.bias);
  put_le(out, static_cast<std::uint64_t>(model.support_vectors.size()));
  for (const auto& sv : model.support_vectors) {
    if (sv.size() != model.dim) {
      throw DimensionError("support vector of length " +
                           std::to_string(sv.size()) + " in a model of dim " +
                           std::to_string(model.dim));
    }
    for (double v : sv) put_f64(out, v);
  }
  for (double coefficient : model.coefficients) put_f64(out, coefficient);
  put_le(out, fnv1a64_bytes(out.data(), out.size()));
  detail::atomic_write_text(path, out);
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());

  ModelReader reader(data, path);
  if (reader.get_bytes(sizeof kModelMagic) !=
      std::string(kModelMagic, sizeof kModelMagic)) {
    throw ModelFormatError("bad magic in model file " + path.string());
  }
  const auto version = reader.get_le<std::uint32_t>();
  if (version != kModelVersion) {
    throw ModelFormatError("unsupported model version " +
                           std::to_string(version) + " in " + path.string());
  }

  SvmModel model;
  const auto layout = reader.get_le<std::uint8_t>();
  if (layout != static_cast<std::uint8_t>(RepresentationLayout::CodeFirst)) {
    throw ModelFormatError("unknown representation layout tag " +
                           std::to_string(layout));
  }
  model.layout = RepresentationLayout::CodeFirst;
  const auto positive = reader.get_le<std::uint8_t>();
  if (positive > 1) {
    throw ModelFormatError("unknown positive label tag " +
                           std::to_string(positive));
  }
  model.positive_label = static_cast<Label>(positive);
  reader.get_le<std::uint16_t>(); /* reserved */
  model.dim = reader.get_le<std::uint32_t>();
  if (model.dim == 0) {
    throw ModelFormatError("model with dim 0: " + path.string());
  }
  model.kernel.gamma = reader.get_f64();
  if (!std::isfinite(model.kernel.gamma) || model.kernel.gamma <= 0.0) {
    throw ModelFormatError("model with non-positive gamma: " + path.string());
  }
  model.c = reader.get_f64();
  model.bias = reader.get_f64();
  const auto count = reader.get_le<std::uint64_t>();
  const std::size_t vector_bytes = model.dim * sizeof(double);
  if (count == 0 || count * (vector_bytes + sizeof(double)) >
                        reader.remaining()) {
    throw ModelFormatError("implausible support vector count in " +
                           path.string());
  }
  model.support_vectors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<double> sv(model.dim);
    for (double& v : sv) v = reader.get_f64();
    model.support_vectors.push_back(std::move(sv));
  }
  model.coefficients.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double coefficient = reader.get_f64();
    if (!std::isfinite(coefficient) || coefficient == 0.0) {
      throw ModelFormatError("invalid coefficient in " + path.string());
    }
    model.coefficients.push_back(coefficient);
  }
  const auto declared = reader.get_le<std::uint64_t>();
  const auto actual = fnv1a64_bytes(data.data(), reader.pos() - 8);
  if (declared != actual) {
    throw ModelFormatError("checksum mismatch in model file " + path.string());
  }
  if (reader.remaining() != 0) {
    throw ModelFormatError("trailing bytes in model file " + path.string());
  }
  return model;
}

}  // namespace comuse
