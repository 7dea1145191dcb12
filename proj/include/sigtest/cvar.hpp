#pragma once

// Value-at-risk, CVaR, and the smooth CVaR surrogate expressed through the
// expected signature.

#include <span>
#include <vector>

#include "json.hpp"
#include "sigtest/tensor_algebra.hpp"

namespace sigtest {

// ceil(alpha n)-th order statistic (1-based, at least the first).
double empirical_var(std::span<const double> samples, double alpha);

// min over eta of eta + mean((z - eta)^+) / (1 - alpha). The objective is
// piecewise linear with knots at the samples, so the minimum over the sample
// points is exact.
double empirical_cvar(std::span<const double> samples, double alpha);

struct MaxSurrogate {
  PolynomialCoefficients poly;  // in the original variable x
  double half_width = 0.0;
  double sup_error = 0.0;       // max |Q(x) - max(x, 0)| on a 10001-point grid
};

// Least-squares polynomial of the given degree fitted to max(x, 0) on 4n
// Chebyshev nodes of [-K, K].
MaxSurrogate fit_max_surrogate(int degree, double half_width);

// Default K: twice the largest absolute score, floored at 1e-12.
double default_surrogate_half_width(std::span<const double> scores);

struct CvarSurrogateSpec {
  PolynomialCoefficients q;
  double half_width = 1.0;
  double alpha = 0.9;
};

struct SmoothCvarPolynomial {
  PolynomialCoefficients b;  // ascending powers of rho
  double half_width = 0.0;
  double alpha = 0.0;
  TruncatedTensor w;
  int es_level = 0;
};

// b_m = [m == 1] + (1 / (1 - alpha)) sum_{i >= m} a_i C(i, m) (-1)^m <w^{sh (i-m)}, ES>.
// ES must be truncated at level >= n * w.level() with unit level-0
// coefficient; otherwise DataError naming the required level.
SmoothCvarPolynomial smooth_cvar_coefficients(const TruncatedTensor& w, const TruncatedTensor& es,
                                              const CvarSurrogateSpec& spec, int level_cap = 0);

struct CvarMinimum {
  double rho = 0.0;
  double value = 0.0;
};

// Global minimum on [-K, K] from the endpoints and the real roots of p'.
CvarMinimum minimize_polynomial(const PolynomialCoefficients& p, double lo, double hi);
CvarMinimum minimize_cvar_polynomial(const SmoothCvarPolynomial& p);

// Real roots of a polynomial (companion-matrix eigenvalues, |imag| <= 1e-9).
std::vector<double> real_roots(const PolynomialCoefficients& p);

// Smooth CVaR of -<w, S> plus lambda / 2 * ||w||^2.
double cvar_regularized_objective(const TruncatedTensor& w, const TruncatedTensor& es,
                                  const CvarSurrogateSpec& spec, double lambda);

// Directional derivative of cvar_regularized_objective along h, taken at the
// minimising rho (envelope theorem).
double cvar_regularized_directional_derivative(const TruncatedTensor& w, const TruncatedTensor& h,
                                               const TruncatedTensor& es,
                                               const CvarSurrogateSpec& spec, double lambda);

// Full gradient in the coordinates of w.
TruncatedTensor cvar_regularized_gradient(const TruncatedTensor& w, const TruncatedTensor& es,
                                          const CvarSurrogateSpec& spec, double lambda);

struct DescentTrace {
  std::vector<double> objective;
  std::vector<double> gradient_norm;
  TruncatedTensor w;
};

// Plain fixed-step gradient descent on the regularised objective.
DescentTrace cvar_gradient_descent(TruncatedTensor w0, const TruncatedTensor& es,
                                   const CvarSurrogateSpec& spec, double lambda, double step,
                                   int iterations);

void to_json(nlohmann::json& j, const SmoothCvarPolynomial& p);

}  // namespace sigtest
