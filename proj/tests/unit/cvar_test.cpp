#include <algorithm>
#include <random>

#include "doctest.h"
#include "sigtest/cvar.hpp"
#include "sigtest/datasets.hpp"
#include "sigtest/error.hpp"
#include "sigtest/statistics.hpp"
#include "test_helpers.hpp"

using namespace sigtest;

namespace {

// Brute force: eta + mean((z - eta)^+) / (1 - alpha) over a fine eta grid.
double cvar_grid(const std::vector<double>& z, double alpha) {
  const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
  double best = 1e300;
  for (int i = 0; i <= 20000; ++i) {
    const double eta = *lo + (*hi - *lo) * i / 20000.0;
    double s = 0.0;
    for (double v : z) s += std::max(v - eta, 0.0);
    best = std::min(best, eta + s / (static_cast<double>(z.size()) * (1 - alpha)));
  }
  return best;
}

std::vector<PathStream> bm_paths(std::size_t n, int dim, std::uint64_t seed) {
  BmConfig cfg;
  cfg.n_paths = n;
  cfg.steps = 50;
  cfg.dim = dim;
  cfg.horizon = 1.0;
  cfg.seed = seed;
  return simulate_bm(cfg);
}

}  // namespace

TEST_CASE("empirical VaR and CVaR") {
  CHECK(empirical_var(std::vector<double>{4, 1, 3, 2}, 0.5) == 2.0);
  CHECK(empirical_var(std::vector<double>{7, 7, 7}, 0.3) == 7.0);
  CHECK(empirical_cvar(std::vector<double>{0, 0, 10, 10}, 0.5) == doctest::Approx(10.0));
  CHECK(empirical_cvar(std::vector<double>{2.5, 2.5}, 0.9) == doctest::Approx(2.5));
  CHECK_THROWS_AS(empirical_var(std::vector<double>{}, 0.5), DataError);
  CHECK_THROWS_AS(empirical_cvar(std::vector<double>{}, 0.5), DataError);
  CHECK_THROWS_AS(empirical_cvar(std::vector<double>{1.0}, 1.0), ConfigError);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> z(100000);
  for (auto& v : z) v = g(rng);
  CHECK(std::abs(empirical_var(z, 0.95) - 1.6448536) <= 0.02);
  const double phi = std::exp(-0.5 * 1.2815516 * 1.2815516) / std::sqrt(2 * M_PI);
  CHECK(std::abs(empirical_cvar(z, 0.9) - phi / 0.1) <= 0.03);

  std::uniform_real_distribution<double> u(0.0, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(1 + trial * 3);
    for (auto& v : s) v = g(rng);
    const double a = u(rng);
    const double c = empirical_cvar(s, a);
    CHECK(c >= empirical_var(s, a) - 1e-12);
    CHECK(c == doctest::Approx(cvar_grid(s, a)).epsilon(1e-3));
    // translation and positive homogeneity
    std::vector<double> t = s;
    for (auto& v : t) v = 3.0 * v + 1.5;
    CHECK(empirical_cvar(t, a) == doctest::Approx(3.0 * c + 1.5).epsilon(1e-12));
  }
}

TEST_CASE("max surrogate") {
  const auto lin = fit_max_surrogate(1, 1.0);
  CHECK(lin.poly.a.size() == 2);
  // least squares of max(x,0) on symmetric nodes: slope 1/2 by symmetry of x and |x|/2
  CHECK(lin.poly.a[1] == doctest::Approx(0.5).epsilon(1e-12));

  const auto q2 = fit_max_surrogate(2, 2.0);
  const auto q8 = fit_max_surrogate(8, 2.0);
  CHECK(q8.sup_error < q2.sup_error);
  double prev = 1e9;
  for (int n : {2, 4, 8, 16}) {
    const double at0 = std::abs(fit_max_surrogate(n, 1.0).poly(0.0));
    CHECK(at0 < prev);
    prev = at0;
  }
  CHECK_THROWS_AS(fit_max_surrogate(0, 1.0), ConfigError);
  CHECK_THROWS_AS(fit_max_surrogate(2, 0.0), ConfigError);
  CHECK(default_surrogate_half_width(std::vector<double>{-3, 1}) == 6.0);
}

TEST_CASE("smooth CVaR coefficients on small cases") {
  SUBCASE("degree one") {
    // <w, ES> = 3 with w = 3 * e_1 and ES level-1 coefficient 1
    TruncatedTensor w(1, 1);
    w.at(Word{1}) = 3.0;
    TruncatedTensor es(1, 1);
    es.at(Word{}) = 1.0;
    es.at(Word{1}) = 1.0;
    const auto p = smooth_cvar_coefficients(w, es, {PolynomialCoefficients{{0, 1}}, 10.0, 0.5});
    REQUIRE(p.b.a.size() == 2);
    CHECK(p.b.a[0] == doctest::Approx(6.0));
    CHECK(p.b.a[1] == doctest::Approx(-1.0));
  }
  SUBCASE("constant surrogate") {
    TruncatedTensor w(2, 1);
    w.at(Word{2}) = 1.0;
    TruncatedTensor es = TruncatedTensor::unit(2, 3);
    const auto p = smooth_cvar_coefficients(w, es, {PolynomialCoefficients{{0.7, 0, 0}}, 1.0, 0.8});
    CHECK(p.b.a[0] == doctest::Approx(0.7 / 0.2));
    CHECK(p.b.a[1] == doctest::Approx(1.0));
    CHECK(p.b.a[2] == doctest::Approx(0.0));
  }
  SUBCASE("expected signature level too low") {
    TruncatedTensor w(1, 2);
    CHECK_THROWS_AS(smooth_cvar_coefficients(w, TruncatedTensor::unit(1, 3), {PolynomialCoefficients{{0, 0, 1}}, 1.0, 0.5}),
                    DataError);
  }
}

TEST_CASE("smooth CVaR polynomial equals the sample average") {
  const auto paths = bm_paths(200, 1, 9);
  const auto es = fit_expected_signature(paths, 2).mean;
  const auto w = TruncatedTensor::basis(1, 1, Word{1});
  CvarSurrogateSpec spec{fit_max_surrogate(2, 4.0).poly, 4.0, 0.9};
  const auto p = smooth_cvar_coefficients(w, es, spec);
  for (double rho : {-1.0, 0.0, 1.0}) {
    double direct = 0.0;
    for (const auto& x : paths) direct += spec.q(pairing(w, signature(x, 1).tensor()) - rho);
    direct = rho + direct / (200.0 * 0.1);
    CHECK(std::abs(p.b(rho) - direct) <= 1e-8 * std::abs(direct));
  }
}

TEST_CASE("polynomial minimisation") {
  const auto lin = minimize_polynomial(PolynomialCoefficients{{6, -1}}, -2, 2);
  CHECK(lin.rho == 2.0);
  CHECK(lin.value == 4.0);
  const auto sq = minimize_polynomial(PolynomialCoefficients{{0, 0, 1}}, -1, 1);
  CHECK(sq.rho == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sq.value == doctest::Approx(0.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    PolynomialCoefficients p;
    for (int i = 0; i <= 6; ++i) p.a.push_back(g(rng));
    const auto m = minimize_polynomial(p, -1.5, 1.5);
    double grid = 1e300;
    for (int i = 0; i <= 100000; ++i) grid = std::min(grid, p(-1.5 + 3.0 * i / 100000.0));
    CHECK(m.value <= grid + 1e-12);
    CHECK(m.value >= grid - 1e-6);
  }
  const auto roots = real_roots(PolynomialCoefficients{{-6, 11, -6, 1}});
  REQUIRE(roots.size() == 3);
  CHECK(roots[0] == doctest::Approx(1.0));
  CHECK(roots[2] == doctest::Approx(3.0));
  CHECK(real_roots(PolynomialCoefficients{{1, 0, 1}}).empty());
}

TEST_CASE("regularised objective") {
  const auto paths = bm_paths(100, 2, 4);
  const auto es = fit_expected_signature(paths, 8).mean;
  CvarSurrogateSpec spec{fit_max_surrogate(4, 3.0).poly, 3.0, 0.9};

  SUBCASE("zero functional") {
    const TruncatedTensor zero(2, 2);
    const double v = cvar_regularized_objective(zero, es, spec, 1.0);
    PolynomialCoefficients direct;
    // rho + Q(-rho) / (1 - alpha)
    direct.a.assign(spec.q.a.size(), 0.0);
    for (std::size_t i = 0; i < spec.q.a.size(); ++i) direct.a[i] = spec.q.a[i] * ((i % 2) ? -1.0 : 1.0) / 0.1;
    direct.a[1] += 1.0;
    CHECK(v == doctest::Approx(minimize_polynomial(direct, -3, 3).value).epsilon(1e-10));
  }
  SUBCASE("no regularisation equals the smooth CVaR of -<w,S>") {
    std::mt19937_64 rng(2);
    auto w = sigtest::testing::random_tensor(rng, 2, 2);
    w *= 0.2;
    auto neg = w;
    neg *= -1.0;
    const auto p = smooth_cvar_coefficients(neg, es, spec);
    CHECK(cvar_regularized_objective(w, es, spec, 0.0) == doctest::Approx(minimize_cvar_polynomial(p).value));
    const double n = l2_norm(w);
    CHECK(cvar_regularized_objective(w, es, spec, 2.0) ==
          doctest::Approx(minimize_cvar_polynomial(p).value + n * n));
  }
  SUBCASE("gradient against central differences") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      auto w = sigtest::testing::random_tensor(rng, 2, 2);
      w *= 0.2;
      const auto grad = cvar_regularized_gradient(w, es, spec, 0.5);
      const auto h = sigtest::testing::random_tensor(rng, 2, 2);
      const double eps = 1e-5;
      const double fd = (cvar_regularized_objective(w + eps * h, es, spec, 0.5) -
                         cvar_regularized_objective(w - eps * h, es, spec, 0.5)) /
                        (2 * eps);
      const double dd = cvar_regularized_directional_derivative(w, h, es, spec, 0.5);
      CHECK(std::abs(dd - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
      CHECK(pairing(grad, h) == doctest::Approx(dd).epsilon(1e-10));
    }
  }
  SUBCASE("descent decreases the objective") {
    TruncatedTensor w0(2, 2);
    for (auto& c : w0.coeffs()) c = 0.1;
    const auto trace = cvar_gradient_descent(w0, es, spec, 4.0, 0.05, 20);
    REQUIRE(trace.objective.size() == 21);
    CHECK(trace.objective.back() < trace.objective.front());
    CHECK(trace.gradient_norm.back() < trace.gradient_norm.front());
  }
}

TEST_CASE("smooth CVaR approaches empirical CVaR as the degree grows") {
  const auto paths = bm_paths(200, 1, 12);
  const auto w = TruncatedTensor::basis(1, 1, Word{1});
  std::vector<double> z;
  for (const auto& x : paths) z.push_back(pairing(w, signature(x, 1).tensor()));
  const double target = empirical_cvar(z, 0.8);
  const double k = 2.0 * default_surrogate_half_width(z);
  const auto es = fit_expected_signature(paths, 8).mean;
  double prev = 1e300;
  for (int n : {2, 4, 8}) {
    CvarSurrogateSpec spec{fit_max_surrogate(n, k).poly, k, 0.8};
    const double v = minimize_cvar_polynomial(smooth_cvar_coefficients(w, es, spec)).value;
    const double err = std::abs(v - target);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("smooth CVaR JSON") {
  TruncatedTensor w(1, 1);
  w.at(Word{1}) = 1.0;
  const auto p = smooth_cvar_coefficients(w, TruncatedTensor::unit(1, 2), {PolynomialCoefficients{{0, 0.5, 0.25}}, 2.0, 0.5});
  nlohmann::json j = p;
  CHECK(j.at("b").size() == 3);
  CHECK(j.at("alpha") == 0.5);
  CHECK(j.contains("w"));
}
