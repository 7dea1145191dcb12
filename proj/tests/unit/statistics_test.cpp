#include <random>

#include "doctest.h"
#include "sigtest/datasets.hpp"
#include "sigtest/error.hpp"
#include "sigtest/statistics.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace sigtest;
using sigtest::testing::random_path;
using sigtest::testing::random_tensor;

using sigtest::testing::grid_min;
using sigtest::testing::ocsvm_objective;
using sigtest::testing::random_psd;

TEST_CASE("expected signature fit") {
  std::mt19937_64 rng(2);
  const auto p = random_path(rng, 2, 4);
  const std::vector<PathStream> one{p};
  const auto m = fit_expected_signature(one, 3);
  const auto s = signature(p, 3).tensor();
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(m.mean.at_index(i) == s.at_index(i));
  CHECK(m.mean[Word{}] == 1.0);
  CHECK(distance_to_mean(p, m) == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<PathStream> two{p, p};
  const auto m2 = fit_expected_signature(two, 3);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(m2.mean.at_index(i) == doctest::Approx(s.at_index(i)));

  CHECK_THROWS_AS(fit_expected_signature(std::vector<PathStream>{}, 3), DataError);
  const std::vector<PathStream> mixed{p, random_path(rng, 3, 2)};
  CHECK_THROWS_AS(fit_expected_signature(mixed, 3), DataError);
}

TEST_CASE("expected signature of Brownian paths is centred at level one") {
  BmConfig cfg;
  cfg.n_paths = 100;
  cfg.dim = 2;
  cfg.seed = 77;
  const auto paths = simulate_bm(cfg);
  const auto m = fit_expected_signature(paths, 2);
  // level-1 coordinate = endpoint, variance T = 2 per coordinate
  const double sigma = std::sqrt(2.0 / 100.0);
  CHECK(std::abs(m.mean[Word{1}]) <= 3 * sigma);
  CHECK(std::abs(m.mean[Word{2}]) <= 3 * sigma);
}

TEST_CASE("distance to mean") {
  std::mt19937_64 rng(5);
  std::vector<PathStream> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(random_path(rng, 2, 5));
  const auto m = fit_expected_signature(corpus, 3, true);
  REQUIRE(m.has_corpus());
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_path(rng, 2, 5);
    const auto s = signature(x, 3).tensor();
    double sq = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double mean = 0.0;
      for (const auto& c : corpus) mean += signature(c, 3).tensor().at_index(i);
      mean /= 10.0;
      sq += (s.at_index(i) - mean) * (s.at_index(i) - mean);
    }
    const double direct = distance_to_mean(x, m);
    CHECK(direct == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
    CHECK(std::abs(distance_to_mean_kernel(x, m) - direct) <= 1e-8 * std::max(1.0, direct));
  }
  // constant path against a model whose mean is the trivial signature
  const std::vector<PathStream> flat{PathStream({0, 1}, {3, 3}, 1)};
  const auto mf = fit_expected_signature(flat, 4);
  CHECK(distance_to_mean(PathStream({0, 2}, {-1, -1}, 1), mf) == 0.0);

  const auto no_corpus = fit_expected_signature(corpus, 3);
  CHECK_THROWS_AS(distance_to_mean_kernel(corpus[0], no_corpus), DataError);
  CHECK_THROWS(distance_to_mean(random_path(rng, 3, 2), m));
}

TEST_CASE("variance norm") {
  SUBCASE("identity covariance gives the euclidean norm") {
    std::vector<TruncatedTensor> corpus{TruncatedTensor(1, 1)};
    const auto model = make_conformance_model(corpus, Eigen::MatrixXd::Identity(2, 2), 0.0);
    const std::vector<double> v{3.0, -4.0};
    CHECK(variance_norm(v, model) == 5.0);
  }
  SUBCASE("diagonal") {
    std::vector<TruncatedTensor> corpus{TruncatedTensor(1, 1)};
    Eigen::MatrixXd sig(2, 2);
    sig << 4, 0, 0, 1;
    const auto model = make_conformance_model(corpus, sig, 0.0);
    CHECK(variance_norm(std::vector<double>{2.0, 0.0}, model) == doctest::Approx(1.0));
  }
  SUBCASE("outside the range with no ridge") {
    std::vector<TruncatedTensor> corpus{TruncatedTensor(1, 1)};
    Eigen::MatrixXd sig(2, 2);
    sig << 1, 0, 0, 0;
    const auto model = make_conformance_model(corpus, sig, 0.0);
    CHECK(std::isinf(variance_norm(std::vector<double>{0.0, 1.0}, model)));
    CHECK(variance_norm(std::vector<double>{2.0, 0.0}, model) == doctest::Approx(2.0));
  }
  SUBCASE("sup over unit-variance functionals") {
    std::mt19937_64 rng(19);
    const auto sig = random_psd(rng, 7, 40);
    std::vector<TruncatedTensor> corpus{TruncatedTensor(2, 2)};
    const auto model = make_conformance_model(corpus, sig, 0.0);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(7);
    for (int i = 0; i < 7; ++i) v(i) = g(rng);
    const std::vector<double> vv(v.data(), v.data() + 7);
    const double exact = variance_norm(vv, model);
    // random functionals rescaled to x^T Sigma x = 1, biased toward the optimum direction
    const Eigen::VectorXd opt = sig.ldlt().solve(v);
    double best = 0.0;
    for (int trial = 0; trial < 1000000; ++trial) {
      Eigen::VectorXd x(7);
      for (int i = 0; i < 7; ++i) x(i) = g(rng);
      x = opt.normalized() + 0.05 * x;
      x /= std::sqrt(x.dot(sig * x));
      best = std::max(best, x.dot(v));
    }
    CHECK(best <= exact * (1 + 1e-12));
    CHECK(best >= 0.99 * exact);
  }
  SUBCASE("non PSD rejected") {
    Eigen::MatrixXd sig(2, 2);
    sig << 1, 0, 0, -1;
    CHECK_THROWS_AS(make_conformance_model({TruncatedTensor(1, 1)}, sig, 0.0), DataError);
  }
}

TEST_CASE("conformance score") {
  std::mt19937_64 rng(23);
  std::vector<PathStream> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(random_path(rng, 2, 4));
  const auto model = fit_conformance(corpus, 2);
  CHECK(model.ridge > 0.0);
  CHECK(conformance_score(corpus[3], model) == doctest::Approx(0.0).epsilon(1e-10));

  const auto x = random_path(rng, 2, 4);
  const auto sx = signature(x, 2).tensor();
  double loop_min = 1e300;
  for (const auto& c : corpus) {
    auto diff = sx - signature(c, 2).tensor();
    loop_min = std::min(loop_min, variance_norm(diff, model));
  }
  CHECK(conformance_score(x, model) == doctest::Approx(loop_min).epsilon(1e-10));
  CHECK(conformance_score(x, model) > 0.0);

  // single-element corpus
  const std::vector<PathStream> single{corpus[0]};
  const auto m1 = fit_conformance(single, 2, 1.0);
  auto diff = sx - signature(corpus[0], 2).tensor();
  CHECK(conformance_score(x, m1) == doctest::Approx(variance_norm(diff, m1)));
  // zero covariance with unit ridge: plain euclidean distance
  CHECK(conformance_score(x, m1) == doctest::Approx(l2_norm(diff)));
}

TEST_CASE("variance-adjusted conformance and spectral norm") {
  const std::vector<PathStream> corpus{PathStream({0, 1}, {0, 0}, 1), PathStream({0, 1}, {0, 2}, 1)};
  const PathStream x({0, 1}, {0, 3}, 1);
  CHECK(variance_adjusted_conformance(x, corpus, Eigen::MatrixXd::Identity(1, 1)) == doctest::Approx(1.0));
  CHECK(variance_adjusted_conformance(x, corpus, 4 * Eigen::MatrixXd::Identity(1, 1)) == doctest::Approx(2.0));

  std::mt19937_64 rng(8);
  const auto sig = random_psd(rng, 6, 6);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(6);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    v = sig * v;
    lambda = v.norm();
    v /= lambda;
  }
  CHECK(spectral_norm_psd(sig) == doctest::Approx(lambda).epsilon(1e-8));
  Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(spectral_norm_psd(bad), DataError);
}

TEST_CASE("ocsvm dual solver") {
  SUBCASE("identity gram") {
    const auto sol = ocsvm_fit(Eigen::MatrixXd::Identity(2, 2), 1.0);
    CHECK(sol.alphas[0] == doctest::Approx(0.5));
    CHECK(sol.alphas[1] == doctest::Approx(0.5));
    CHECK(sol.rho == doctest::Approx(0.5));
  }
  SUBCASE("all-ones gram") {
    const auto sol = ocsvm_fit(Eigen::MatrixXd::Ones(2, 2), 1.0);
    CHECK(sol.alphas[0] == doctest::Approx(0.5));
    CHECK(sol.rho == doctest::Approx(1.0));
  }
  SUBCASE("infeasible") {
    CHECK_THROWS_AS(ocsvm_fit(Eigen::MatrixXd::Identity(4, 4), 0.2), ConfigError);
    Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(ocsvm_fit(bad, 0.5), DataError);
  }
  SUBCASE("grid search oracle at n = 4") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
      const auto k = random_psd(rng, 4, 3);
      const auto sol = ocsvm_fit(k, 0.5);
      const double obj = ocsvm_objective(k, sol.alphas);
      CHECK(obj <= grid_min(k, 0.5, 0.01) + 1e-12);
      CHECK(obj >= grid_min(k, 0.5, 0.01) - 1e-3);
    }
  }
  SUBCASE("KKT and constraints on random grams") {
    std::mt19937_64 rng(42);
    for (int n : {20, 80, 200}) {
      const auto k = random_psd(rng, n, std::max(3, n / 4));
      const double nu = 0.1;
      const auto sol = ocsvm_fit(k, nu);
      CHECK(sol.converged);
      CHECK(sol.kkt_residual <= 1e-6);
      double sum = 0.0;
      for (double a : sol.alphas) {
        sum += a;
        CHECK(a >= 0.0);
        CHECK(a <= 1.0 / (nu * n) + 1e-15);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(ocsvm_kkt_residual(k, sol.alphas, nu) == doctest::Approx(sol.kkt_residual).epsilon(1e-6));
    }
  }
}

TEST_CASE("ocsvm model scoring") {
  BmConfig cfg;
  cfg.n_paths = 200;
  cfg.steps = 50;
  cfg.seed = 5;
  const auto paths = simulate_bm(cfg);
  const double nu = 0.1;
  const auto m = fit_ocsvm(paths, 3, nu);
  double sum = 0.0;
  for (double a : m.alphas) sum += a;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));

  int negative = 0;
  for (const auto& p : paths) negative += ocsvm_score(p, m) < -1e-9 ? 1 : 0;
  CHECK(static_cast<double>(negative) / 200.0 <= nu + 0.05);

  // margin support vectors sit on the boundary
  const double upper = 1.0 / (nu * 200.0);
  for (std::size_t i = 0; i < m.alphas.size(); ++i) {
    if (m.alphas[i] > 1e-9 && m.alphas[i] < upper - 1e-9) {
      CHECK(std::abs(ocsvm_score(TruncatedSignature(m.support[i]), m)) <= 1e-6);
    }
  }
  // dual and primal agree
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto sig = signature(random_path(rng, 1, 10), 3);
    CHECK(std::abs(ocsvm_score(sig, m) - ocsvm_score_primal(sig, m)) <= 1e-10 * (1 + std::abs(ocsvm_score(sig, m))));
  }
}

TEST_CASE("single support path scoring") {
  const PathStream x1({0, 1}, {0, 1}, 1);
  OcsvmModel m;
  m.level = 2;
  m.dim = 1;
  m.nu = 1.0;
  m.rho = 0.25;
  m.alphas = {1.0};
  m.support = {signature(x1, 2).tensor()};
  m.support_ids = {"x1"};
  m.primal = m.support[0];
  const PathStream x({0, 1}, {0, 2}, 1);
  CHECK(ocsvm_score(x, m) == doctest::Approx(truncated_sig_kernel(x1, x, 2) - 0.25));
}

TEST_CASE("tamsd") {
  std::vector<double> t, x;
  for (int j = 0; j <= 20; ++j) {
    t.push_back(j);
    x.push_back(j);
  }
  const PathStream line(t, x, 1);
  for (int tau : {1, 3, 7}) CHECK(tamsd(line, tau) == doctest::Approx(tau * tau));
  CHECK(tamsd(PathStream(t, std::vector<double>(21, 2.0), 1), 4) == 0.0);
  CHECK_THROWS_AS(tamsd(line, 20), DataError);
  CHECK_THROWS_AS(tamsd(line, 0), ConfigError);

  // 2-d: squared euclidean increments
  std::vector<double> xy;
  for (int j = 0; j <= 20; ++j) {
    xy.push_back(j);
    xy.push_back(2.0 * j);
  }
  CHECK(tamsd(PathStream(t, xy, 2), 2) == doctest::Approx(20.0));
}
