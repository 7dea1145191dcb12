#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "sigtest/error.hpp"
#include "sigtest/signature.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace sigtest;
using sigtest::testing::random_path;
using sigtest::testing::quadrature_signature;
using sigtest::testing::words_up_to;

namespace {

PathStream line(std::vector<double> t, std::vector<double> x, int dim = 1) {
  return PathStream(std::move(t), std::move(x), dim);
}

}  // namespace

TEST_CASE("single segment signatures") {
  const auto s = signature(line({0, 1}, {0, 2}), 3);
  CHECK(s[Word{}] == 1.0);
  CHECK(s[Word{1}] == doctest::Approx(2.0));
  CHECK(s[Word{1, 1}] == doctest::Approx(2.0));
  CHECK(s[Word{1, 1, 1}] == doctest::Approx(4.0 / 3.0));

  const auto s2 = signature(line({0, 1}, {0, 0, 1, 1}, 2), 2);
  CHECK(s2[Word{1}] == doctest::Approx(1.0));
  CHECK(s2[Word{2}] == doctest::Approx(1.0));
  for (const auto& w : {Word{1, 1}, Word{1, 2}, Word{2, 1}, Word{2, 2}}) CHECK(s2[w] == doctest::Approx(0.5));
}

TEST_CASE("signature matches nested quadrature") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const auto p = random_path(rng, 2, 5);
    const auto exact = signature(p, 3).tensor();
    const auto quad = quadrature_signature(p, 3, 10000);
    for (std::size_t i = 0; i < exact.size(); ++i) {
      CHECK(std::abs(exact.at_index(i) - quad.at_index(i)) <= 1e-6 * std::max(1.0, std::abs(exact.at_index(i))));
    }
  }
}

TEST_CASE("chen relation") {
  std::mt19937_64 rng(12);
  SUBCASE("d=1 two segments") {
    const auto a = signature(line({0, 1}, {0, 1.5}), 2);
    const auto b = signature(line({1, 2}, {1.5, 1.5 - 0.5}), 2);
    const auto c = chen_concat(a, b);
    CHECK(c[Word{1}] == doctest::Approx(1.0));
    CHECK(c[Word{1, 1}] == doctest::Approx(0.5));
  }
  SUBCASE("trivial signature is neutral") {
    const auto s = signature(random_path(rng, 3, 4), 4);
    const auto trivial = signature(line({0, 1}, {2, 2, 2, 2, 2, 2}, 3), 4);
    const auto c = chen_concat(s, trivial);
    for (std::size_t i = 0; i < s.tensor().size(); ++i) CHECK(c.tensor().at_index(i) == s.tensor().at_index(i));
  }
  SUBCASE("split anywhere") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_path(rng, 3, 8);
      const std::size_t cut = 1 + static_cast<std::size_t>(trial % 7);
      std::vector<double> lt(p.times().begin(), p.times().begin() + static_cast<long>(cut) + 1);
      std::vector<double> lx(p.points().begin(), p.points().begin() + static_cast<long>((cut + 1) * 3));
      std::vector<double> rt(p.times().begin() + static_cast<long>(cut), p.times().end());
      std::vector<double> rx(p.points().begin() + static_cast<long>(cut * 3), p.points().end());
      const auto whole = signature(p, 4).tensor();
      const auto joined = chen_concat(signature(line(lt, lx, 3), 4), signature(line(rt, rx, 3), 4)).tensor();
      for (std::size_t i = 0; i < whole.size(); ++i) CHECK(std::abs(whole.at_index(i) - joined.at_index(i)) <= 1e-12 * (1 + std::abs(whole.at_index(i))));
    }
  }
  SUBCASE("shape mismatch") {
    const auto a = signature(line({0, 1}, {0, 1}), 2);
    const auto b = signature(line({0, 1}, {0, 1}), 3);
    CHECK_THROWS_AS(chen_concat(a, b), ConfigError);
  }
}

TEST_CASE("signature invariances") {
  std::mt19937_64 rng(13);
  const auto p = random_path(rng, 2, 4);
  const auto s = signature(p, 4).tensor();

  // subdividing a segment leaves the signature unchanged
  std::vector<double> t = p.times(), x = p.points();
  const double tm = 0.5 * (t[1] + t[2]);
  t.insert(t.begin() + 2, tm);
  x.insert(x.begin() + 4, {0.3 * x[2] + 0.7 * x[4], 0.3 * x[3] + 0.7 * x[5]});
  // the inserted point is not at the time midpoint on purpose: only the trace matters
  const auto s_sub = signature(line(t, x, 2), 4).tensor();
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s.at_index(i) - s_sub.at_index(i)) <= 1e-12 * (1 + std::abs(s.at_index(i))));

  // scaling by lambda multiplies level k by lambda^k
  std::vector<double> scaled = p.points();
  for (auto& v : scaled) v *= 1.7;
  const auto ss = signature(line(p.times(), scaled, 2), 4).tensor();
  for (int k = 0; k <= 4; ++k) {
    const auto a = s.level_coeffs(k);
    const auto b = ss.level_coeffs(k);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i] * std::pow(1.7, k)).epsilon(1e-12));
  }
}

TEST_CASE("shuffle property of signatures") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = signature(random_path(rng, 2, 5), 4).tensor();
    for (const auto& u : words_up_to(2, 2)) {
      for (const auto& v : words_up_to(2, 2)) {
        const auto uv = shuffle(TruncatedTensor::basis(2, 2, u), TruncatedTensor::basis(2, 2, v), 4);
        const double rhs = pairing(uv, s);
        CHECK(std::abs(s[u] * s[v] - rhs) <= 1e-10 * (1 + std::abs(rhs)));
      }
    }
  }
}

TEST_CASE("time augmentation") {
  const auto a = time_augment(line({0, 1}, {5, 5}));
  CHECK(a.dim() == 2);
  CHECK(a.point(0)[0] == 0.0);
  CHECK(a.point(1)[0] == 1.0);
  CHECK(a.point(1)[1] == 5.0);
  const auto b = time_augment(line({0, 0.5, 2}, {1, 2, 3}));
  CHECK(b.point(1)[0] == doctest::Approx(0.25));
  CHECK(b.point(2)[0] == 1.0);
  CHECK(time_augment(b).dim() == 3);
}

TEST_CASE("invisibility reset") {
  const auto r = invisibility_reset(line({0, 1, 2}, {0, 1, 3}));
  REQUIRE(r.dim() == 2);
  REQUIRE(r.nodes() == 5);
  CHECK(r.point(0)[1] == 1.0);
  CHECK(r.point(2)[1] == 1.0);
  CHECK(r.point(3)[0] == 3.0);
  CHECK(r.point(3)[1] == 0.0);
  CHECK(r.point(4)[0] == 0.0);
  CHECK(r.point(4)[1] == 0.0);
  CHECK(r.time(3) == 3.0);
  CHECK(r.time(4) == 4.0);

  const auto z = invisibility_reset(line({0, 1}, {0, 0}));
  for (std::size_t i = 0; i < z.nodes(); ++i) CHECK(z.point(i)[0] == 0.0);

  std::mt19937_64 rng(6);
  const auto p = random_path(rng, 2, 6);
  const auto s = signature(invisibility_reset(p), 3);
  CHECK(std::abs(s[Word{1}]) < 1e-12);
  CHECK(std::abs(s[Word{2}]) < 1e-12);

  const std::vector<PathTransform> order{PathTransform::kInvisibilityReset, PathTransform::kTimeAugment};
  const auto both = apply_transforms(p, order);
  CHECK(both.dim() == 4);
  CHECK(both.point(both.nodes() - 1)[0] == 1.0);
  CHECK(parse_transform("time") == PathTransform::kTimeAugment);
  CHECK(parse_transform("invisibility") == PathTransform::kInvisibilityReset);
  CHECK_THROWS_AS(parse_transform("leadlag"), ConfigError);
}

TEST_CASE("holder norm") {
  std::vector<double> t, x;
  for (int i = 0; i <= 10; ++i) {
    t.push_back(i / 10.0);
    x.push_back(i / 10.0);
  }
  CHECK(holder_norm(line(t, x), 0.5) == doctest::Approx(2.0));
  CHECK(holder_norm(line({0, 3}, {-2, -2}), 0.3) == doctest::Approx(2.0));
  CHECK_THROWS_AS(holder_norm(line(t, x), 1.0), ConfigError);

  std::mt19937_64 rng(3);
  const auto p = random_path(rng, 2, 12);
  const double t0 = p.time(0), span = p.time(p.nodes() - 1) - t0;
  double sup = 0.0, ratio = 0.0;
  for (std::size_t i = 0; i < p.nodes(); ++i) {
    sup = std::max(sup, std::hypot(p.point(i)[0], p.point(i)[1]));
    for (std::size_t j = i + 1; j < p.nodes(); ++j) {
      const double dist = std::hypot(p.point(i)[0] - p.point(j)[0], p.point(i)[1] - p.point(j)[1]);
      ratio = std::max(ratio, dist / std::pow((p.time(j) - p.time(i)) / span, 0.4));
    }
  }
  (void)t0;
  CHECK(holder_norm(p, 0.4) == doctest::Approx(sup + ratio).epsilon(1e-12));
}

TEST_CASE("truncated signature kernel") {
  std::mt19937_64 rng(15);
  const auto x = random_path(rng, 2, 5);
  const auto y = random_path(rng, 2, 5);
  CHECK(truncated_sig_kernel(x, line({0, 1}, {1, 1, 1, 1}, 2), 3) == doctest::Approx(1.0));
  const double n = l2_norm(signature(x, 3).tensor());
  CHECK(truncated_sig_kernel(x, x, 3) == doctest::Approx(n * n));
  CHECK(truncated_sig_kernel(x, x, 3) >= 1.0);
  const auto sx = signature(x, 3), sy = signature(y, 3);
  double direct = 0.0;
  for (const auto& w : words_up_to(2, 3)) direct += sx[w] * sy[w];
  CHECK(truncated_sig_kernel(x, y, 3) == doctest::Approx(direct).epsilon(1e-13));
  CHECK(truncated_sig_kernel(x, y, 3) == doctest::Approx(truncated_sig_kernel(y, x, 3)).epsilon(1e-15));

  std::vector<PathStream> paths;
  for (int i = 0; i < 20; ++i) paths.push_back(random_path(rng, 2, 4, 0.5));
  Eigen::MatrixXd g(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) g(i, j) = truncated_sig_kernel(paths[static_cast<std::size_t>(i)], paths[static_cast<std::size_t>(j)], 3);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("path validation and CSV") {
  CHECK_THROWS_AS(line({0, 0}, {1, 2}), DataError);
  CHECK_THROWS_AS(line({0}, {1}), DataError);
  CHECK_THROWS_AS(line({0, 1}, {1, 2, 3}), DataError);

  std::mt19937_64 rng(1);
  std::vector<PathStream> paths{random_path(rng, 2, 3), random_path(rng, 2, 4)};
  paths[0].set_id("a");
  paths[1].set_id("b");
  std::stringstream ss;
  write_path_csv(ss, paths);
  const std::string text = ss.str();
  CHECK(text.rfind("path_id,t,x1,x2\n", 0) == 0);
  const auto back = read_path_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id() == "b");
  CHECK(back[1].points() == paths[1].points());
  CHECK(back[1].times() == paths[1].times());

  std::stringstream bad("path_id,t,x1\na,0,1\na,0,2\n");
  CHECK_THROWS_AS(read_path_csv(bad), DataError);
  std::stringstream bad_header("id,t,x\n");
  CHECK_THROWS_AS(read_path_csv(bad_header), DataError);
  std::stringstream bad_number("path_id,t,x1\na,0,1\na,1,zz\n");
  CHECK_THROWS_AS(read_path_csv(bad_number), DataError);
  CHECK(format_double(0.1) == "0.1");
}
