#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sigtest/signature.hpp"
#include "test_helpers.hpp"

namespace sigtest::testing {

// Iterated integrals by nested trapezoid sums on a refinement of the path.
inline TruncatedTensor quadrature_signature(const PathStream& p, int level, int points) {
  const int d = p.dim();
  std::vector<std::vector<double>> grid;
  const int per_segment = std::max(1, points / static_cast<int>(p.segments()));
  for (std::size_t s = 0; s < p.segments(); ++s) {
    const auto a = p.point(s);
    const auto b = p.point(s + 1);
    for (int k = (s == 0 ? 0 : 1); k <= per_segment; ++k) {
      const double u = static_cast<double>(k) / per_segment;
      std::vector<double> x(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + u * (b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)]);
      grid.push_back(x);
    }
  }
  const auto words = words_up_to(d, level);
  // running values of every word's integral along the grid
  std::vector<double> cur(words.size(), 0.0), prev;
  cur[0] = 1.0;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    prev = cur;
    // words are sorted by length, so prefixes are updated before extensions
    for (std::size_t w = 1; w < words.size(); ++w) {
      const auto& letters = words[w].letters();
      Word prefix(std::vector<Letter>(letters.begin(), letters.end() - 1));
      const std::size_t pi = word_index(prefix, d);
      const int i = letters.back() - 1;
      const double dx = grid[j + 1][static_cast<std::size_t>(i)] - grid[j][static_cast<std::size_t>(i)];
      cur[w] = prev[w] + 0.5 * (prev[pi] + cur[pi]) * dx;
    }
  }
  return TruncatedTensor(d, level, cur);
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, int n, int rank) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = g(rng);
  return a * a.transpose();
}

inline double ocsvm_objective(const Eigen::MatrixXd& k, const std::vector<double>& a) {
  Eigen::Map<const Eigen::VectorXd> v(a.data(), static_cast<Eigen::Index>(a.size()));
  return 0.5 * v.dot(k * v);
}

// Exhaustive search over the box-simplex at resolution h (n = 4).
inline double grid_min(const Eigen::MatrixXd& k, double upper, double h) {
  double best = 1e300;
  const int steps = static_cast<int>(std::round(upper / h));
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j)
      for (int l = 0; l <= steps; ++l) {
        const double a0 = i * h, a1 = j * h, a2 = l * h, a3 = 1.0 - a0 - a1 - a2;
        if (a3 < -1e-12 || a3 > upper + 1e-12) continue;
        best = std::min(best, ocsvm_objective(k, {a0, a1, a2, a3}));
      }
  return best;
}

}  // namespace sigtest::testing
