#include <algorithm>
#include <random>

#include "doctest.h"
#include "sigtest/error.hpp"
#include "sigtest/tails.hpp"

using namespace sigtest;

namespace {

TciParams example_tci() {
  TciParams t;
  t.p = 0.5;
  t.c1 = 1.0;
  t.c2 = 2.0;
  t.growth = 1.0;
  return t;
}

// Inverse-CDF draws with survival exp(-b r^{2/N}).
std::vector<double> weibull_sample(std::size_t n, int level, double b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = std::pow(-std::log(1.0 - u(rng)) / b, level / 2.0);
  return out;
}

}  // namespace

TEST_CASE("deviation functions") {
  const auto rde = DeviationFunction::rde(2.0);
  CHECK(deviation(rde, 4.0) == 16.0);
  CHECK(deviation_inverse(rde, 16.0) == 4.0);
  CHECK(deviation_inverse(rde, 1.0 / 16.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(deviation(rde, 0.5) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  for (const auto& f : {DeviationFunction::quadratic(), rde, DeviationFunction::rde(0.7),
                        DeviationFunction::table({0, 1, 2}, {0, 0.5, 3})}) {
    CHECK(deviation_inverse(f, 0.0) == 0.0);
    for (double t = 1e-4; t < 1e4; t *= 1.7) {
      CHECK(deviation_inverse(f, deviation(f, t)) == doctest::Approx(t).epsilon(1e-12));
    }
  }
  // bisection oracle on the rde form
  for (double s : {0.01, 0.3, 2.0, 50.0}) {
    double lo = 0.0, hi = 100.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::min(mid * mid, std::pow(mid, 4.0)) < s ? lo : hi) = mid;
    }
    CHECK(deviation_inverse(rde, s) == doctest::Approx(lo).epsilon(1e-12));
  }
  const auto table = DeviationFunction::table({0, 1, 2}, {0, 0.5, 3});
  CHECK(deviation(table, 1.5) == doctest::Approx(1.75));
  CHECK(deviation(table, 3.0) == doctest::Approx(5.5));
  CHECK_THROWS_AS(deviation(rde, -1.0), ConfigError);
  CHECK_THROWS_AS(DeviationFunction::table({0, 1}, {0, 0}), ConfigError);
  CHECK(parse_deviation_kind("rde") == DeviationKind::kRde);
}

TEST_CASE("type-I threshold closed form") {
  const auto tci = example_tci();
  const double log_term = 2.0 * std::log(20.0);
  const double hand = std::sqrt(2.0) * std::max(log_term, log_term * log_term);
  const double r = type1_threshold(0.1, 2, 1, 1.0, tci);
  CHECK(r == doctest::Approx(hand).epsilon(1e-14));
  CHECK(std::abs(r - 50.74) < 0.05);
  CHECK(type1_threshold(0.1, 2, 1, 2.0, tci) == doctest::Approx(2 * r).epsilon(1e-14));
  const double exact = type1_threshold(0.1, 2, 1, 1.0, tci, ThresholdForm::kExactInverse);
  CHECK(exact == doctest::Approx(std::sqrt(2.0) * log_term).epsilon(1e-14));

  // alpha = C2 makes the log term vanish; C2 = 1 is the boundary inside (0, 1)
  TciParams unit = tci;
  unit.c2 = 1.0;
  CHECK(type1_threshold(0.999999, 2, 1, 1.0, unit) > 0.0);
  TciParams big = tci;
  big.c2 = 1.0;
  CHECK(type1_threshold(0.5, 3, 2, 1.0, big) > 0.0);

  double prev = 1e300;
  for (double a = 0.001; a < 1.0; a += 0.05) {
    const double v = type1_threshold(a, 3, 2, 1.5, TciParams{});
    CHECK(v <= prev);
    prev = v;
  }
  CHECK_THROWS_AS(type1_threshold(0.0, 2, 1, 1.0, tci), ConfigError);
  CHECK_THROWS_AS(type1_threshold(1.0, 2, 1, 1.0, tci), ConfigError);
}

TEST_CASE("type-I bound") {
  const auto tci = example_tci();
  CHECK(type1_bound(0.0, 3, 2, 1.0, tci) == 1.0);
  CHECK(type1_bound_raw(0.0, 3, 2, 1.0, tci) == 2.0);
  double prev = 2.0;
  for (double r = 1e-3; r < 1e6; r *= 2.0) {
    const double b = type1_bound_raw(r, 3, 2, 1.0, tci);
    CHECK(b <= prev);
    prev = b;
  }
  CHECK(prev < 1e-12);

  for (int level : {1, 2, 3, 5}) {
    for (double a : {0.01, 0.05, 0.1, 0.5}) {
      for (auto form : {ThresholdForm::kConservative, ThresholdForm::kExactInverse}) {
        const double r = type1_threshold(a, level, 2, 0.7, TciParams{}, form);
        const double b = type1_bound_raw(r, level, 2, 0.7, TciParams{});
        CHECK(b <= a + 1e-12);
        if (form == ThresholdForm::kExactInverse) CHECK(std::abs(b - a) <= 1e-12);
      }
    }
  }
}

TEST_CASE("type-II lower bound") {
  TciParams tci;
  tci.p = 1.0;
  tci.deviation = DeviationFunction::quadratic();

  SUBCASE("infinite entropy is uninformative") {
    const auto r = type2_lower_bound(10, 2, 1, 1, std::numeric_limits<double>::infinity(), 0.5, tci, 1.0);
    CHECK(r.value == 0.0);
    CHECK(r.uninformative);
  }
  SUBCASE("worked case") {
    const auto r = type2_lower_bound(10, 2, 1, 1, 0.0, 0.5, tci, 1.0);
    CHECK(r.small_entropy_case);
    const double hand = 1.0 - std::sqrt(0.1) * std::pow(2.0, 0.25) * 0.75;
    CHECK(r.value == doctest::Approx(hand).epsilon(1e-14));
  }
  SUBCASE("tuples against direct recomputation") {
    struct Tuple {
      double r;
      int n, d;
      double w, h, m, p, c;
      Type2Exponent e;
    };
    const std::vector<Tuple> tuples{
        {10, 2, 1, 1, 0.0, 0.5, 1.0, 1.0, Type2Exponent::kProof},
        {10, 2, 1, 1, 0.0, 2.0, 1.0, 1.0, Type2Exponent::kProof},
        {50, 3, 2, 0.5, 0.1, 0.3, 0.5, 2.0, Type2Exponent::kProof},
        {50, 3, 2, 0.5, 4.0, 0.3, 0.5, 2.0, Type2Exponent::kProof},
        {7, 4, 3, 2, 0.25, 0.1, 0.8, 0.3, Type2Exponent::kStatement},
        {7, 4, 3, 2, 9.0, 0.1, 0.8, 0.3, Type2Exponent::kStatement},
        {1e4, 1, 1, 1, 0.5, 0.2, 1.0, 1.0, Type2Exponent::kProof},
        {1e4, 6, 2, 3, 0.01, 0.9, 0.25, 0.1, Type2Exponent::kStatement},
        {2, 2, 2, 1, 1.0, 1.0, 1.0, 1.0, Type2Exponent::kProof},
        {300, 5, 1, 0.1, 2.5, 0.0, 0.6, 5.0, Type2Exponent::kProof},
    };
    bool saw_small = false, saw_large = false;
    for (const auto& t : tuples) {
      TciParams q;
      q.p = t.p;
      const double h = std::sqrt(t.h) + t.m;  // quadratic deviation inverse
      const double k = h <= 1.0 ? 1.0 - 1.0 / t.n + h / t.n : h;
      const double e = t.e == Type2Exponent::kProof ? t.p / (2.0 * t.n) : 1.0 / (2.0 * t.n * t.p);
      const double hand = std::max(0.0, 1.0 - std::pow(t.w / t.r, t.p / t.n) * t.c * std::pow(t.d, t.p) *
                                                  std::pow(static_cast<double>(t.n), e) * k);
      const auto got = type2_lower_bound(t.r, t.n, t.d, t.w, t.h, t.m, q, t.c, t.e);
      CHECK(std::abs(got.value - hand) <= 1e-12);
      CHECK(got.small_entropy_case == (h <= 1.0));
      (h <= 1.0 ? saw_small : saw_large) = true;
    }
    CHECK(saw_small);
    CHECK(saw_large);
  }
  SUBCASE("monotone in r and H") {
    double prev = -1.0;
    for (double r = 0.1; r < 1e8; r *= 3.0) {
      const double v = type2_lower_bound(r, 3, 2, 1.0, 0.3, 0.4, tci, 1.0).value;
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(prev > 0.99);
    prev = 2.0;
    for (double h = 0.0; h < 50.0; h += 0.5) {
      const double v = type2_lower_bound(1e4, 3, 2, 1.0, h, 0.4, tci, 1.0).value;
      CHECK(v <= prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(type2_lower_bound(0.0, 2, 1, 1, 0, 0, tci, 1.0), ConfigError);
}

TEST_CASE("TSB bound") {
  const auto z = tsb_bound(0.0, 0.0, 1.0);
  CHECK(z.phi_bar == doctest::Approx(0.5));
  const auto a = tsb_bound(1.5, 1.0, 1.0);
  CHECK(a.phi_bar == doctest::Approx(0.00620967).epsilon(1e-5));
  CHECK(a.exponential == doctest::Approx(std::exp(-3.125)));
  CHECK(a.exponential_valid);
  CHECK(a.exponential >= a.phi_bar);
  const auto b1 = tsb_bound(3.0, 0.2, 2.0);
  const auto b2 = tsb_bound(1.5, 0.2, 1.0);
  CHECK(b1.phi_bar == doctest::Approx(b2.phi_bar).epsilon(1e-15));
  CHECK(!tsb_bound(0.5, -2.0, 1.0).exponential_valid);
  for (double x = 0.0; x < 8.0; x += 0.25) CHECK(std::exp(-x * x / 2) >= normal_upper_tail(x));
}

TEST_CASE("TCI constant estimates") {
  const std::vector<double> norms{0.5, 1.0, 1.5};
  const auto c = estimate_tci_constants(norms, 1.0, 1.0);
  CHECK(c.mean_norm_p == doctest::Approx(1.0));
  CHECK(c.c1 == doctest::Approx(0.5));
  const double c2 = (std::exp(0.125 * 0.25) + std::exp(0.125) + std::exp(0.125 * 2.25)) / 3.0;
  CHECK(c.c2 == doctest::Approx(c2));
  CHECK(c.c2 >= 1.0);
}

TEST_CASE("Weibull tail fit") {
  const auto s = weibull_sample(100000, 4, 1.0, 3);
  const auto m = weibull_tail_fit(s, 4, 0.2);
  CHECK(std::abs(m.b - 1.0) <= 0.05);
  CHECK(std::abs(m.a - 1.0) <= 0.15);
  CHECK(m.tail_points == 20000);
  CHECK(m.sample_size == 100000);
  const auto m10 = weibull_tail_fit(s, 4, 0.1);
  const auto m50 = weibull_tail_fit(s, 4, 0.5);
  CHECK(std::abs(m10.b - 1.0) <= 0.05);
  CHECK(std::abs(m50.b - 1.0) <= 0.05);

  std::vector<double> doubled = s;
  for (auto& v : doubled) v *= 2.0;
  CHECK(weibull_tail_fit(doubled, 4, 0.2).b == doctest::Approx(m.b * std::pow(2.0, -0.5)).epsilon(0.02));

  CHECK_THROWS_AS(weibull_tail_fit(std::vector<double>(50, 1.0), 4), DataError);
  CHECK_THROWS_AS(weibull_tail_fit(std::vector<double>(500, 1.0), 4), DataError);
  CHECK_THROWS_AS(weibull_tail_fit(s, 4, 0.7), ConfigError);

  nlohmann::json j = m;
  CHECK(j.at("kind") == "weibull");
  const auto back = j.get<TailModelWeibull>();
  CHECK(back.a == m.a);
  CHECK(back.b == m.b);
  CHECK(back.level == 4);
}

TEST_CASE("parametric p-values") {
  TailModelWeibull m;
  m.a = 0.8;
  m.b = 1.2;
  m.level = 4;
  CHECK(parametric_pvalue(0.0, m) == 0.8);
  m.a = 1.5;
  CHECK(parametric_pvalue(0.0, m) == 1.0);
  CHECK(parametric_pvalue(-3.0, m) == 1.0);
  double prev = 1.0;
  for (double s = 0.0; s < 100.0; s += 0.37) {
    const double p = parametric_pvalue(s, m);
    CHECK(p <= prev);
    CHECK(p > 0.0);
    prev = p;
  }
  CHECK_THROWS_AS(parametric_pvalue(1.0, TailModelWeibull{}), DataError);

  const auto fit = weibull_tail_fit(weibull_sample(100000, 4, 1.0, 8), 4, 0.2);
  const auto fresh = weibull_sample(100000, 4, 1.0, 9);
  for (double t : {0.01, 0.05, 0.1}) {
    const auto hits = std::count_if(fresh.begin(), fresh.end(), [&](double s) { return parametric_pvalue(s, fit) <= t; });
    CHECK(static_cast<double>(hits) / 1e5 <= 1.1 * t + 0.01);
  }
}

TEST_CASE("empirical p-values") {
  const std::vector<double> cal{1, 2, 3, 4, 5};
  CHECK(empirical_pvalue(10.0, cal) == doctest::Approx(1.0 / 6.0));
  CHECK(empirical_pvalue(0.0, cal) == 1.0);
  CHECK(empirical_pvalue(3.0, cal) == doctest::Approx(4.0 / 6.0));
  CHECK(empirical_pvalue_sorted(3.0, cal) == empirical_pvalue(3.0, cal));
  CHECK_THROWS_AS(empirical_pvalue(1.0, std::vector<double>{}), DataError);

  // p <= 1 even when the calibration set is the test set
  for (double s : cal) CHECK(empirical_pvalue(s, cal) <= 1.0);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const int reps = 20000;
  for (double t : {0.01, 0.05, 0.1}) {
    int hits = 0;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> c(999);
      for (auto& v : c) v = g(rng);
      std::sort(c.begin(), c.end());
      hits += empirical_pvalue_sorted(g(rng), c) <= t ? 1 : 0;
    }
    const double rate = static_cast<double>(hits) / reps;
    CHECK(rate <= t + 3 * std::sqrt(t * (1 - t) / reps));
  }
}
