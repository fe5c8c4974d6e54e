// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "rotoscat/classifier.hpp"
#include "svm_qp.hpp"

using namespace rotoscat;

namespace {

Eigen::MatrixXd gaussian_matrix(int n, int dim, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(n, dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Two blobs in the plane separated along the first axis, labels 0 / 1.
void separable_blobs(int n, std::uint64_t seed, Eigen::MatrixXd& x, std::vector<int>& labels) {
  x = gaussian_matrix(n, 2, seed, 0.3);
  labels.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    x(i, 0) += labels[i] == 1 ? 2.0 : -2.0;
  }
}

std::vector<int> signs_of(const std::vector<int>& labels, int cls) {
  std::vector<int> s;
  for (int l : labels) s.push_back(l == cls ? 1 : -1);
  return s;
}

}  // namespace

TEST_CASE("kernel: self-similarity, range, symmetry, positive semidefinite") {
  const auto x = gaussian_matrix(40, 6, 1);
  const auto k = kernel_matrix(x, x, 2.0);
  for (Eigen::Index i = 0; i < 40; ++i) CHECK(k(i, i) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k.minCoeff() > 0.0);
  CHECK(k.maxCoeff() <= 1.0 + 1e-15);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (k + k.transpose()));
  CHECK(eig.eigenvalues().minCoeff() > -1e-8);
  CHECK(k(3, 7) == doctest::Approx(gaussian_kernel(x.row(3).transpose(), x.row(7).transpose(), 2.0)).epsilon(1e-12));
}

TEST_CASE("bandwidth is the mean row norm") {
  CHECK_THROWS_AS(estimate_bandwidth(Eigen::MatrixXd(0, 3)), ClassifierError);
  CHECK_THROWS_AS(estimate_bandwidth(Eigen::MatrixXd::Zero(4, 3)), ClassifierError);
  CHECK(estimate_bandwidth(Eigen::RowVector2d(3.0, 0.0)) == 3.0);
  const auto x = gaussian_matrix(100, 10, 2);
  double mean = 0.0, mean_sq = 0.0;
  for (int i = 0; i < 100; ++i) {
    double s = 0.0;
    for (int c = 0; c < 10; ++c) s += x(i, c) * x(i, c);
    mean += std::sqrt(s) / 100.0;
    mean_sq += s / 100.0;
  }
  CHECK(estimate_bandwidth(x) == doctest::Approx(mean).epsilon(1e-12));
  CHECK(estimate_bandwidth(x, true) == doctest::Approx(mean_sq).epsilon(1e-12));
}

TEST_CASE("separable toy set is classified perfectly") {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  separable_blobs(60, 3, x, labels);
  const auto model = train(x, labels, 2, estimate_bandwidth(x), {.C = 10.0});
  CHECK(accuracy(predict(model, x), labels) == 1.0);
  for (const auto& d : model.diagnostics) {
    CHECK(d.converged);
    CHECK(d.gap < 1e-3);
  }
  Eigen::MatrixXd fresh;
  std::vector<int> fresh_labels;
  separable_blobs(40, 4, fresh, fresh_labels);
  CHECK(accuracy(predict(model, fresh), fresh_labels) == 1.0);
}

TEST_CASE("box constraints hold on the stored coefficients") {
  const auto x = gaussian_matrix(80, 4, 5);
  std::vector<int> labels;
  for (int i = 0; i < 80; ++i) labels.push_back(i % 3);
  const auto model = train(x, labels, 3, 1.0, {.C = 0.5});
  CHECK(model.coef.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(model.coef.col(c).sum()) < 1e-9);  // y'alpha = 0
}

TEST_CASE("tiny instances reach the exact dual optimum") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = std::uniform_int_distribution<int>(4, 9)(rng);
    const auto x = gaussian_matrix(n, 3, 50 + seed);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng() % 2));
    labels[0] = 0;
    labels[1] = 1;
    const double C = seed % 3 == 0 ? 0.3 : 2.0;
    const auto k = kernel_matrix(x, x, 1.5);
    const auto signs = signs_of(labels, 1);
    Eigen::VectorXd alpha;
    double bias = 0.0;
    SvmOptions opts;
    opts.C = C;
    const auto diag = solve_binary(k, signs, C, opts, alpha, bias);
    const auto exact = oracle::exact_svm_dual(k, signs, C);
    CHECK(diag.converged);
    CHECK(diag.dual_objective == doctest::Approx(oracle::dual_objective(k, signs, alpha)).epsilon(1e-10));
    CHECK(std::abs(diag.dual_objective - exact.objective) < 1e-3);
    CHECK(diag.dual_objective <= exact.objective + 1e-9);
  }
}

TEST_CASE("duplicating a training point never lowers the exact dual optimum") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto x = gaussian_matrix(7, 2, 200 + seed);
    std::vector<int> labels{0, 1, 0, 1, 1, 0, 1};
    Eigen::MatrixXd xd(8, 2);
    xd << x, x.row(static_cast<Eigen::Index>(seed % 7));
    auto ld = labels;
    ld.push_back(labels[seed % 7]);
    const double base = oracle::exact_svm_dual(kernel_matrix(x, x, 1.0), signs_of(labels, 1), 1.0).objective;
    const double dup = oracle::exact_svm_dual(kernel_matrix(xd, xd, 1.0), signs_of(ld, 1), 1.0).objective;
    CHECK(dup >= base - 1e-9);
    Eigen::VectorXd a1, a2;
    double b = 0.0;
    const auto s1 = solve_binary(kernel_matrix(x, x, 1.0), signs_of(labels, 1), 1.0, {}, a1, b);
    const auto s2 = solve_binary(kernel_matrix(xd, xd, 1.0), signs_of(ld, 1), 1.0, {}, a2, b);
    CHECK(s2.dual_objective >= s1.dual_objective - 1e-3);
  }
}

TEST_CASE("random labels give roughly the majority prior on held-out data") {
  const auto x = gaussian_matrix(600, 5, 9);
  std::mt19937_64 rng(10);
  std::vector<int> labels;
  for (int i = 0; i < 600; ++i) labels.push_back(std::bernoulli_distribution(0.7)(rng) ? 1 : 0);
  std::vector<int> train_labels(labels.begin(), labels.begin() + 400);
  std::vector<int> test_labels(labels.begin() + 400, labels.end());
  const Eigen::MatrixXd xtr = x.topRows(400);
  const Eigen::MatrixXd xte = x.bottomRows(200);
  const auto model = train(xtr, train_labels, 2, estimate_bandwidth(xtr));
  const double acc = accuracy(predict(model, xte), test_labels);
  CHECK(acc > 0.55);
  CHECK(acc < 0.85);
}

TEST_CASE("decision values equal a direct kernel sum") {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  separable_blobs(30, 11, x, labels);
  for (int i = 0; i < 30; i += 3) labels[i] = 2;
  const auto model = train(x, labels, 3, 0.8);
  const auto q = gaussian_matrix(12, 2, 12, 2.0);
  const auto f = decision_values(model, q);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (int c = 0; c < 3; ++c) {
      double direct = model.bias[c];
      for (Eigen::Index s = 0; s < model.support.rows(); ++s) {
        double d2 = 0.0;
        for (Eigen::Index t = 0; t < q.cols(); ++t) d2 += std::pow(q(i, t) - model.support(s, t), 2);
        direct += model.coef(s, c) * std::exp(-d2 / (2.0 * model.sigma2));
      }
      CHECK(f(i, c) == doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("single support vector: decision at the vector is alpha + b") {
  KernelModel m;
  m.sigma2 = 1.3;
  m.C = 1.0;
  m.n_classes = 2;
  m.support = Eigen::MatrixXd{{0.5, -1.0}};
  m.coef = Eigen::MatrixXd{{0.7, -0.7}};
  m.bias = Eigen::Vector2d(0.1, -0.2);
  const auto f = decision_values(m, m.support);
  CHECK(f(0, 0) == doctest::Approx(0.8));
  CHECK(f(0, 1) == doctest::Approx(-0.9));
}

TEST_CASE("ties go to the lowest class; common positive scaling keeps the argmax") {
  KernelModel m;
  m.sigma2 = 1.0;
  m.n_classes = 3;
  m.support = Eigen::MatrixXd{{0.0}};
  m.coef = Eigen::MatrixXd{{0.0, 0.0, 0.0}};
  m.bias = Eigen::Vector3d(0.2, 0.5, 0.5);
  CHECK(predict(m, Eigen::MatrixXd{{1.0}}) == std::vector<int>{1});

  Eigen::MatrixXd x;
  std::vector<int> labels;
  separable_blobs(30, 13, x, labels);
  for (int i = 0; i < 30; i += 4) labels[i] = 2;
  auto model = train(x, labels, 3, 0.7);
  const auto q = gaussian_matrix(25, 2, 14, 2.0);
  const auto before = predict(model, q);
  model.coef *= 3.5;
  model.bias *= 3.5;
  CHECK(predict(model, q) == before);
}

TEST_CASE("row-cache path agrees with the full kernel matrix") {
  const auto x = gaussian_matrix(120, 3, 15);
  std::vector<int> labels;
  for (int i = 0; i < 120; ++i) labels.push_back((x(i, 0) + 0.3 * x(i, 1) > 0) ? 1 : 0);
  const auto full = train(x, labels, 2, 1.0);
  SvmOptions lru;
  lru.full_cache_limit = 10;
  lru.row_cache_bytes = 16 * 120 * sizeof(double);
  const auto cached = train(x, labels, 2, 1.0, lru);
  CHECK(full.support == cached.support);
  CHECK((full.coef - cached.coef).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((full.bias - cached.bias).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("iteration cap reports non-convergence") {
  const auto x = gaussian_matrix(50, 3, 16);
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i % 2);
  SvmOptions opts;
  opts.max_iterations = 2;
  CHECK_THROWS_WITH_AS(train(x, labels, 2, 1.0, opts), doctest::Contains("non-convergence"), ClassifierError);
  opts.fail_on_nonconvergence = false;
  const auto model = train(x, labels, 2, 1.0, opts);
  CHECK_FALSE(model.diagnostics[0].converged);
  CHECK(model.diagnostics[0].iterations == 2);
}

TEST_CASE("training input errors") {
  const auto x = gaussian_matrix(10, 2, 17);
  CHECK_THROWS_AS(train(x, std::vector<int>(10, 0), 2, 1.0), ClassifierError);
  CHECK_THROWS_AS(train(x, std::vector<int>(9, 0), 2, 1.0), ClassifierError);
  std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  CHECK_THROWS_AS(train(x, labels, 2, 0.0), ClassifierError);
  const auto model = train(x, labels, 2, 1.0);
  CHECK_THROWS_AS(predict(model, Eigen::MatrixXd::Zero(1, 3)), ClassifierError);
}

TEST_CASE("model serialization round trip and parallel classes") {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  separable_blobs(40, 18, x, labels);
  for (int i = 0; i < 40; i += 5) labels[i] = 2;
  const auto model = train(x, labels, 3, 1.0, {.threads = 1});
  const auto threaded = train(x, labels, 3, 1.0, {.threads = 3});
  CHECK(model.coef == threaded.coef);
  const auto path = std::filesystem::temp_directory_path() / "rotoscat_test_model.bin";
  save_model(model, path);
  const auto back = load_model(path);
  CHECK(back.support == model.support);
  CHECK(back.coef == model.coef);
  CHECK(back.bias == model.bias);
  CHECK(back.sigma2 == model.sigma2);
  CHECK(back.diagnostics.size() == 3u);
  CHECK(predict(back, x) == predict(model, x));
  std::filesystem::remove(path);
}
