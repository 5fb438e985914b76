// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 comuse contributors
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "comuse/errors.hpp"
#include "comuse/svm.hpp"
#include "support/jacobi_eig.hpp"
#include "support/kkt_audit.hpp"
#include "support/qp_oracle.hpp"
#include "support/synth.hpp"
#include "support/tmpdir.hpp"

using namespace comuse;

namespace {

/* Test-side Gram matrix, written independently of the production kernel. */
std::vector<std::vector<double>> gram_matrix(
    const std::vector<PairRepresentation>& xs, double gamma) {
  const std::size_t n = xs.size();
  std::vector<std::vector<double>> gram(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < xs[i].size(); ++k) {
        const double diff = xs[i][k] - xs[j][k];
        d2 += diff * diff;
      }
      gram[i][j] = std::exp(-gamma * d2);
    }
  }
  return gram;
}

std::vector<double> signs(const std::vector<Label>& labels) {
  std::vector<double> y;
  y.reserve(labels.size());
  for (Label label : labels) y.push_back(label == Label::Useful ? 1.0 : -1.0);
  return y;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

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

/* Trains and checks the optimizer against the independent QP solver and
 * the KKT audit; returns the model for further checks. */
SvmModel check_against_oracle(const synth::VectorData& data, double gamma,
                              const TrainConfig& config,
                              double dual_tolerance = 1e-6) {
  std::vector<double> alpha;
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{gamma}, &alpha);

  const auto y = signs(data.labels);
  const auto gram = gram_matrix(data.points, gamma);

  const auto reference = oracle::solve_svm_dual(gram, y, config.c);
  const double reached = oracle::dual_value(gram, y, alpha);
  INFO("dual reached " << reached << ", reference " << reference.objective);
  CHECK(near(reached, reference.objective, dual_tolerance));
  /* a feasible point can never beat the optimum by more than solver noise */
  CHECK(reached <= reference.objective + 1e-7);

  const std::vector<double> c(data.points.size(), config.c);
  const auto audit = oracle::audit_kkt(data.points, y, alpha, c, gamma,
                                       model.bias, config.tolerance);
  INFO(audit.detail << " at index " << audit.worst_index << ", violation "
                    << audit.worst_violation);
  CHECK(audit.ok);
  return model;
}

}  // namespace

TEST_CASE("rbf kernel matches frozen values") {
  const std::vector<double> zero = {0.0, 0.0};
  const std::vector<double> unit = {1.0, 0.0};
  /* exp(-1), independently computed */
  CHECK(rbf_kernel(zero, unit, KernelParams{1.0}) == 0.36787944117144233);
  /* gamma 0.3, squared distance 5.3125 */
  const std::vector<double> a = {0.5, -1.5};
  const std::vector<double> b = {2.0, 0.25};
  CHECK(rbf_kernel(a, b, KernelParams{0.3}) == 0.20316232275153173);
}

TEST_CASE("rbf kernel properties") {
  const std::vector<double> a = {0.3, -2.0, 1.0};
  const std::vector<double> b = {-1.0, 0.5, 2.5};
  const KernelParams params{0.7};
  CHECK(rbf_kernel(a, a, params) == 1.0);
  CHECK(rbf_kernel(a, b, params) == rbf_kernel(b, a, params));
  CHECK(rbf_kernel(a, b, params) > 0.0);
  CHECK(rbf_kernel(a, b, params) < 1.0);

  CHECK_THROWS_AS(rbf_kernel(a, std::vector<double>{1.0, 2.0}, params),
                  DimensionError);
  CHECK_THROWS_AS(rbf_kernel(a, b, KernelParams{0.0}), InvalidArgument);
  CHECK_THROWS_AS(rbf_kernel(a, b, KernelParams{-1.0}), InvalidArgument);
  CHECK_THROWS_AS(
      rbf_kernel(a, b, KernelParams{std::numeric_limits<double>::infinity()}),
      InvalidArgument);
}

TEST_CASE("rbf gram matrices are positive semidefinite") {
  const auto data = synth::gaussian_clusters(8, 3, 2.0, 21);
  for (double gamma : {0.05, 1.0, 25.0}) {
    const auto gram = gram_matrix(data.points, gamma);
    const auto eigenvalues = oracle::symmetric_eigenvalues(gram);
    for (double value : eigenvalues) {
      CHECK(value >= -1e-8);
    }
  }
}

TEST_CASE("scale_gamma matches the variance rule") {
  /* entries 0,2,2,4: mean 2, population variance 2, dim 2 -> 1/(2*2) */
  CHECK(scale_gamma({{0.0, 2.0}, {2.0, 4.0}}) == 0.25);
  /* constant input falls back to 1/dim */
  CHECK(scale_gamma({{3.0, 3.0, 3.0}}) == 0.33333333333333331);
  CHECK_THROWS_AS(scale_gamma({}), InvalidArgument);
  CHECK_THROWS_AS(scale_gamma({{}}), InvalidArgument);
  CHECK_THROWS_AS(scale_gamma({{1.0, 2.0}, {1.0}}), DimensionError);
}

TEST_CASE("smo agrees with the reference qp solver on separated clusters") {
  const auto data = synth::gaussian_clusters(15, 4, 4.0, 31);
  TrainConfig config;
  config.c = 1.0;
  config.tolerance = 1e-8;
  const auto model = check_against_oracle(data, 0.7, config);
  CHECK(model.dim == 4);
  CHECK(!model.support_vectors.empty());

  /* a well separated training set is classified cleanly */
  const auto predictions = predict_batch(model, data.points);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    correct += predictions[i] == data.labels[i];
  }
  CHECK(correct == data.labels.size());
}

TEST_CASE("smo agrees with the reference qp solver on overlapping clusters") {
  /* heavy overlap forces bound alphas */
  const auto data = synth::gaussian_clusters(20, 3, 1.0, 77);
  TrainConfig config;
  config.c = 0.5;
  config.tolerance = 1e-8;
  std::vector<double> alpha;
  train_smo(data.points, data.labels, config, KernelParams{1.2}, &alpha);
  bool any_bound = false;
  for (double a : alpha) any_bound |= a == 0.5;
  CHECK(any_bound);
  check_against_oracle(data, 1.2, config);
}

TEST_CASE("smo agrees with the reference qp solver at small and large c") {
  const auto data = synth::gaussian_clusters(12, 2, 2.0, 5);
  for (double c : {0.1, 10.0}) {
    TrainConfig config;
    config.c = c;
    config.tolerance = 1e-8;
    check_against_oracle(data, 0.9, config);
  }
}

TEST_CASE("training is deterministic") {
  const auto data = synth::gaussian_clusters(10, 3, 2.0, 13);
  TrainConfig config;
  config.c = 2.0;

  std::vector<double> alpha_a, alpha_b;
  const auto a = train_smo(data.points, data.labels, config, KernelParams{0.8},
                           &alpha_a);
  const auto b = train_smo(data.points, data.labels, config, KernelParams{0.8},
                           &alpha_b);
  CHECK(alpha_a == alpha_b);
  CHECK(a.bias == b.bias);
  CHECK(a.support_vectors == b.support_vectors);
  CHECK(a.coefficients == b.coefficients);
}

TEST_CASE("kernel cache size does not change the result") {
  const auto data = synth::gaussian_clusters(25, 3, 1.5, 99);
  TrainConfig small_cache;
  small_cache.kernel_cache_mb = 1;
  TrainConfig big_cache;
  big_cache.kernel_cache_mb = 512;

  std::vector<double> alpha_small, alpha_big;
  const auto a = train_smo(data.points, data.labels, small_cache,
                           KernelParams{1.0}, &alpha_small);
  const auto b = train_smo(data.points, data.labels, big_cache,
                           KernelParams{1.0}, &alpha_big);
  CHECK(alpha_small == alpha_big);
  CHECK(a.bias == b.bias);
}

TEST_CASE("decision values are translation invariant") {
  const auto data = synth::gaussian_clusters(10, 2, 3.0, 41);
  auto shifted = data;
  for (auto& x : shifted.points) {
    x[0] += 100.0;
    x[1] -= 250.0;
  }
  TrainConfig config;
  config.tolerance = 1e-8; /* tight, so both runs reach the same optimum */
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{0.6});
  const auto model_shifted =
      train_smo(shifted.points, shifted.labels, config, KernelParams{0.6});

  double max_diff = 0.0;
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const double value = decision_value(model, data.points[i]);
    const double value_shifted =
        decision_value(model_shifted, shifted.points[i]);
    max_diff = std::max(max_diff, std::abs(value - value_shifted));
    if (std::abs(value) > 1e-3) {
      CHECK(predict(model, data.points[i]) ==
            predict(model_shifted, shifted.points[i]));
    }
  }
  INFO("largest decision value difference " << max_diff);
  CHECK(max_diff <= 1e-5);
}

TEST_CASE("co-located points with opposing labels still converge") {
  /* every point identical: eta is exactly zero for all working pairs */
  std::vector<PairRepresentation> points(4, PairRepresentation{0.5, -0.25});
  std::vector<Label> labels = {Label::Useful, Label::Useful, Label::NotUseful,
                               Label::NotUseful};
  TrainConfig config;
  config.c = 1.0;
  std::vector<double> alpha;
  const auto model =
      train_smo(points, labels, config, KernelParams{1.0}, &alpha);

  /* K == 1 everywhere, so W = sum(alpha) under sum(alpha*y) = 0; the
   * optimum fills every multiplier to the box bound. */
  for (double a : alpha) CHECK(a == 1.0);
  CHECK(near(model.bias, 0.0, 1e-9));

  const auto audit =
      oracle::audit_kkt(points, signs(labels), alpha, {1.0, 1.0, 1.0, 1.0},
                        1.0, model.bias, config.tolerance);
  INFO(audit.detail);
  CHECK(audit.ok);
}

TEST_CASE("co-located points with unbalanced labels converge") {
  std::vector<PairRepresentation> points(4, PairRepresentation{1.0});
  std::vector<Label> labels = {Label::Useful, Label::Useful, Label::Useful,
                               Label::NotUseful};
  TrainConfig config;
  std::vector<double> alpha;
  const auto model =
      train_smo(points, labels, config, KernelParams{2.0}, &alpha);

  double alpha_dot_y = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    alpha_dot_y += alpha[i] * (labels[i] == Label::Useful ? 1.0 : -1.0);
  }
  CHECK(near(alpha_dot_y, 0.0, 1e-12));

  const auto audit = oracle::audit_kkt(points, signs(labels), alpha,
                                       std::vector<double>(4, config.c), 2.0,
                                       model.bias, config.tolerance);
  INFO(audit.detail);
  CHECK(audit.ok);
}

TEST_CASE("duplicated points inside a larger set are handled") {
  auto data = synth::gaussian_clusters(8, 3, 2.0, 55);
  /* plant exact duplicates with equal and with opposing labels */
  data.points.push_back(data.points[0]);
  data.labels.push_back(data.labels[0]);
  data.points.push_back(data.points[1]);
  data.labels.push_back(Label::NotUseful);
  TrainConfig config;
  config.tolerance = 1e-8;

  std::vector<double> alpha;
  train_smo(data.points, data.labels, config, KernelParams{0.8}, &alpha);
  const auto gram = gram_matrix(data.points, 0.8);
  const auto y = signs(data.labels);
  const auto reference = oracle::solve_svm_dual(gram, y, config.c);
  CHECK(near(oracle::dual_value(gram, y, alpha), reference.objective, 1e-6));
}

TEST_CASE("per-class cost scaling respects its own box bounds") {
  auto data = synth::gaussian_clusters(18, 3, 1.2, 7);
  /* drop most of the negative class to force imbalance */
  data.points.resize(18 + 6);
  data.labels.resize(18 + 6);

  TrainConfig config;
  config.c = 1.0;
  config.useful_c_scale = 0.5;
  config.not_useful_c_scale = 4.0;
  config.tolerance = 1e-6;

  std::vector<double> alpha;
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{1.0}, &alpha);
  CHECK(model.c == 1.0);

  std::vector<double> c_vector;
  for (Label label : data.labels) {
    c_vector.push_back(label == Label::Useful ? 0.5 : 4.0);
  }
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    CHECK(alpha[i] >= 0.0);
    CHECK(alpha[i] <= c_vector[i]);
  }
  const auto audit = oracle::audit_kkt(data.points, signs(data.labels), alpha,
                                       c_vector, 1.0, model.bias,
                                       config.tolerance);
  INFO(audit.detail << " violation " << audit.worst_violation);
  CHECK(audit.ok);
}

TEST_CASE("model dual objective matches the raw-alpha dual") {
  const auto data = synth::gaussian_clusters(12, 3, 2.0, 3);
  TrainConfig config;
  std::vector<double> alpha;
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{0.5}, &alpha);
  const auto gram = gram_matrix(data.points, 0.5);
  CHECK(near(dual_objective(model),
             oracle::dual_value(gram, signs(data.labels), alpha), 1e-9));
}

TEST_CASE("iteration cap raises a convergence error carrying the best dual") {
  const auto data = synth::gaussian_clusters(20, 3, 1.0, 17);
  TrainConfig config;
  config.max_iters = 25;
  config.tolerance = 1e-10;
  try {
    train_smo(data.points, data.labels, config, KernelParams{1.0});
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& error) {
    CHECK(error.best_dual_objective() >= 0.0); /* ascent starts at zero */
    const auto gram = gram_matrix(data.points, 1.0);
    const auto reference =
        oracle::solve_svm_dual(gram, signs(data.labels), config.c);
    CHECK(error.best_dual_objective() <= reference.objective + 1e-7);
    CHECK(std::string(error.what()).find("25") != std::string::npos);
  }
}

TEST_CASE("degenerate training sets are rejected") {
  const std::vector<PairRepresentation> two = {{0.0, 0.0}, {1.0, 1.0}};
  TrainConfig config;
  CHECK_THROWS_AS(
      train_smo({{1.0}}, {Label::Useful}, config, KernelParams{1.0}),
      DegenerateTrainingError);
  CHECK_THROWS_AS(train_smo({}, {}, config, KernelParams{1.0}),
                  DegenerateTrainingError);
  CHECK_THROWS_AS(train_smo(two, {Label::Useful, Label::Useful}, config,
                            KernelParams{1.0}),
                  DegenerateTrainingError);
  CHECK_THROWS_AS(train_smo(two, {Label::Useful}, config, KernelParams{1.0}),
                  DimensionError);
  CHECK_THROWS_AS(train_smo({{1.0, 2.0}, {1.0}},
                            {Label::Useful, Label::NotUseful}, config,
                            KernelParams{1.0}),
                  DimensionError);
}

TEST_CASE("invalid configuration values are rejected") {
  const std::vector<PairRepresentation> points = {{0.0}, {1.0}};
  const std::vector<Label> labels = {Label::Useful, Label::NotUseful};
  TrainConfig config;
  const auto expect_invalid = [&](TrainConfig bad, KernelParams kernel) {
    CHECK_THROWS_AS(train_smo(points, labels, bad, kernel), InvalidArgument);
  };
  auto with = [&](auto mutate) {
    TrainConfig bad = config;
    mutate(bad);
    return bad;
  };
  expect_invalid(with([](TrainConfig& c) { c.c = 0.0; }), KernelParams{1.0});
  expect_invalid(with([](TrainConfig& c) { c.c = -1.0; }), KernelParams{1.0});
  expect_invalid(with([](TrainConfig& c) { c.tolerance = 0.0; }),
                 KernelParams{1.0});
  expect_invalid(with([](TrainConfig& c) { c.max_passes = 0; }),
                 KernelParams{1.0});
  expect_invalid(with([](TrainConfig& c) { c.max_iters = 0; }),
                 KernelParams{1.0});
  expect_invalid(with([](TrainConfig& c) { c.useful_c_scale = 0.0; }),
                 KernelParams{1.0});
  expect_invalid(with([](TrainConfig& c) { c.not_useful_c_scale = -2.0; }),
                 KernelParams{1.0});
  expect_invalid(config, KernelParams{0.0});
  expect_invalid(config, KernelParams{-3.0});

  CHECK_THROWS_AS(
      train_smo({{0.0}, {std::numeric_limits<double>::quiet_NaN()}}, labels,
                config, KernelParams{1.0}),
      InvalidArgument);
}

TEST_CASE("predict agrees with the sign of the decision value") {
  const auto data = synth::gaussian_clusters(8, 2, 3.0, 2);
  TrainConfig config;
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{1.0});

  for (const auto& x : data.points) {
    const double value = decision_value(model, x);
    CHECK(predict(model, x) ==
          (value >= 0.0 ? Label::Useful : Label::NotUseful));
  }
  CHECK_THROWS_AS(decision_value(model, std::vector<double>{1.0}),
                  DimensionError);

  const auto serial = predict_batch(model, data.points, 1);
  const auto threaded = predict_batch(model, data.points, 4);
  CHECK(serial == threaded);
}

TEST_CASE("models survive a save/load round trip bit for bit") {
  synth::TmpDir dir("svm");
  const auto data = synth::gaussian_clusters(10, 3, 2.0, 11);
  TrainConfig config;
  config.c = 1.5;
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{0.75});

  const auto file = dir / "model.svm";
  save_model(model, file);
  const auto loaded = load_model(file);

  CHECK(loaded.support_vectors == model.support_vectors);
  CHECK(loaded.coefficients == model.coefficients);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.kernel.gamma == model.kernel.gamma);
  CHECK(loaded.dim == model.dim);
  CHECK(loaded.c == model.c);
  CHECK(loaded.positive_label == model.positive_label);
  CHECK(loaded.layout == RepresentationLayout::CodeFirst);

  for (const auto& x : data.points) {
    CHECK(decision_value(loaded, x) == decision_value(model, x));
  }

  /* saving the load gives identical bytes */
  const auto file2 = dir / "model2.svm";
  save_model(loaded, file2);
  CHECK(read_bytes(file) == read_bytes(file2));
}

TEST_CASE("model files reject corruption") {
  synth::TmpDir dir("svm");
  const auto data = synth::gaussian_clusters(6, 2, 2.0, 19);
  TrainConfig config;
  const auto model =
      train_smo(data.points, data.labels, config, KernelParams{1.0});
  const auto file = dir / "model.svm";
  save_model(model, file);
  const std::string good = read_bytes(file);

  SUBCASE("bad magic") {
    std::string bad = good;
    bad[2] = 'Z';
    write_bytes(file, bad);
    CHECK_THROWS_AS(load_model(file), ModelFormatError);
  }
  SUBCASE("unsupported version") {
    std::string bad = good;
    bad[8] = 9;
    write_bytes(file, bad);
    CHECK_THROWS_AS(load_model(file), ModelFormatError);
  }
  SUBCASE("payload flip fails the checksum") {
    std::string bad = good;
    bad[good.size() / 2] ^= 0x01;
    write_bytes(file, bad);
    CHECK_THROWS_AS(load_model(file), ModelFormatError);
  }
  SUBCASE("truncation") {
    write_bytes(file, good.substr(0, good.size() - 5));
    CHECK_THROWS_AS(load_model(file), ModelFormatError);
  }
  SUBCASE("trailing bytes") {
    write_bytes(file, good + "!");
    CHECK_THROWS_AS(load_model(file), ModelFormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model(dir / "absent.svm"), IoError);
  }
}

TEST_CASE("saving an inconsistent model is refused") {
  SvmModel model;
  model.dim = 2;
  model.kernel.gamma = 1.0;
  model.support_vectors = {{1.0, 2.0}};
  model.coefficients = {0.5, 0.5}; /* one vector, two coefficients */
  synth::TmpDir dir("svm");
  CHECK_THROWS_AS(save_model(model, dir / "bad.svm"), InvalidArgument);

  model.coefficients = {0.5};
  model.support_vectors = {{1.0, 2.0, 3.0}}; /* wrong dim */
  CHECK_THROWS_AS(save_model(model, dir / "bad.svm"), DimensionError);
}

TEST_CASE("loaded coefficients must be non-zero and finite") {
  synth::TmpDir dir("svm");
  SvmModel model;
  model.dim = 1;
  model.kernel.gamma = 1.0;
  model.support_vectors = {{1.0}, {2.0}};
  model.coefficients = {1.0, 0.0}; /* zero slips past save, load rejects it */
  save_model(model, dir / "zero.svm");
  CHECK_THROWS_AS(load_model(dir / "zero.svm"), ModelFormatError);
}
