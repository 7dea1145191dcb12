#include "sigtest/cvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "sigtest/error.hpp"

namespace sigtest {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("CVaR level alpha must lie in [0, 1)");
}

std::vector<double> sorted_copy(std::span<const double> samples) {
  if (samples.empty()) throw DataError("empty sample");
  std::vector<double> z(samples.begin(), samples.end());
  for (double v : z) {
    if (!std::isfinite(v)) throw DataError("sample contains a non-finite value");
  }
  std::sort(z.begin(), z.end());
  return z;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Coefficients c_k with Q(z - rho) = sum_k c_k z^k.
std::vector<double> shifted_coefficients(const PolynomialCoefficients& q, double rho) {
  const int n = q.degree();
  std::vector<double> c(static_cast<std::size_t>(std::max(n, 0) + 1), 0.0);
  for (int j = 0; j <= n; ++j) {
    const double aj = q.a[static_cast<std::size_t>(j)];
    if (aj == 0.0) continue;
    double pw = 1.0;  // (-rho)^{j-k}, built from k = j downward
    for (int k = j; k >= 0; --k) {
      c[static_cast<std::size_t>(k)] += aj * binomial(j, k) * pw;
      pw *= -rho;
    }
  }
  return c;
}

void check_es(const TruncatedTensor& w, const TruncatedTensor& es, int degree) {
  if (w.dim() != es.dim()) throw DataError("functional and expected signature differ in dimension");
  const int required = degree * w.level();
  if (es.level() < required) {
    throw DataError("expected signature level " + std::to_string(es.level()) +
                    " is below the required level " + std::to_string(required));
  }
  if (std::abs(es.coeffs()[0] - 1.0) > 1e-12) {
    throw DataError("expected signature must have unit level-0 coefficient");
  }
}

// sum_k c_k v^{sh k} truncated at level, for sparse v.
SparseTensor shuffle_series(const SparseTensor& v, std::span<const double> c, int level) {
  SparseTensor out(v.dim(), level);
  SparseTensor power = SparseTensor::unit(v.dim(), level);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k > 0) power = shuffle(power, v, level);
    if (c[k] == 0.0) continue;
    SparseTensor term = power;
    term *= c[k];
    out += term;
  }
  return out;
}

}  // namespace

double empirical_var(std::span<const double> samples, double alpha) {
  check_alpha(alpha);
  const auto z = sorted_copy(samples);
  const double n = static_cast<double>(z.size());
  // The relative slack keeps products like 0.9 * 10 from rounding up a rank.
  auto k = static_cast<std::size_t>(std::ceil(alpha * n * (1.0 - 1e-12)));
  k = std::clamp<std::size_t>(k, 1, z.size());
  return z[k - 1];
}

double empirical_cvar(std::span<const double> samples, double alpha) {
  check_alpha(alpha);
  const auto z = sorted_copy(samples);
  const std::size_t n = z.size();
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + z[i];
  const double scale = 1.0 / (static_cast<double>(n) * (1.0 - alpha));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double eta = z[j];
    // Samples strictly above index j contribute (z_i - eta).
    const double excess = suffix[j + 1] - static_cast<double>(n - j - 1) * eta;
    best = std::min(best, eta + excess * scale);
  }
  return best;
}

MaxSurrogate fit_max_surrogate(int degree, double half_width) {
  if (degree < 1) throw ConfigError("surrogate degree must be >= 1");
  if (!(half_width > 0.0)) throw ConfigError("surrogate half-width K must be > 0");
  const int m = 4 * degree;
  Eigen::MatrixXd vander(m, degree + 1);
  Eigen::VectorXd target(m);
  for (int j = 0; j < m; ++j) {
    const double t = std::cos(std::numbers::pi * (j + 0.5) / m);
    double pw = 1.0;
    for (int i = 0; i <= degree; ++i) {
      vander(j, i) = pw;
      pw *= t;
    }
    target(j) = std::max(t, 0.0);
  }
  const Eigen::VectorXd c = vander.colPivHouseholderQr().solve(target);

  // max(x, 0) = K max(x / K, 0), so a_i = K^{1-i} c_i.
  MaxSurrogate out;
  out.half_width = half_width;
  out.poly.a.resize(static_cast<std::size_t>(degree) + 1);
  for (int i = 0; i <= degree; ++i) {
    out.poly.a[static_cast<std::size_t>(i)] = c(i) * std::pow(half_width, 1 - i);
  }
  constexpr int kGrid = 10001;
  for (int g = 0; g < kGrid; ++g) {
    const double x = -half_width + 2.0 * half_width * g / (kGrid - 1);
    out.sup_error = std::max(out.sup_error, std::abs(out.poly(x) - std::max(x, 0.0)));
  }
  return out;
}

double default_surrogate_half_width(std::span<const double> scores) {
  double m = 0.0;
  for (double s : scores) m = std::max(m, std::abs(s));
  return std::max(2.0 * m, 1e-12);
}

SmoothCvarPolynomial smooth_cvar_coefficients(const TruncatedTensor& w, const TruncatedTensor& es,
                                              const CvarSurrogateSpec& spec, int level_cap) {
  check_alpha(spec.alpha);
  if (!(spec.half_width > 0.0)) throw ConfigError("surrogate half-width K must be > 0");
  const int n = spec.q.degree();
  if (n < 0) throw ConfigError("surrogate polynomial has no coefficients");
  check_es(w, es, n);
  const int cap = level_cap > 0 ? level_cap : default_level_cap(w.dim());
  const int top = n * w.level();
  if (top > cap) throw TensorCapExceeded(top, cap);

  // moments[k] = <w^{sh k}, ES>
  std::vector<double> moments(static_cast<std::size_t>(n) + 1);
  const SparseTensor ws = SparseTensor::from_dense(w);
  SparseTensor power = SparseTensor::unit(w.dim(), top);
  for (int k = 0; k <= n; ++k) {
    if (k > 0) power = shuffle(power, ws, top);
    moments[static_cast<std::size_t>(k)] = pairing(power, es);
  }

  SmoothCvarPolynomial out;
  out.half_width = spec.half_width;
  out.alpha = spec.alpha;
  out.w = w;
  out.es_level = es.level();
  out.b.a.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double inv = 1.0 / (1.0 - spec.alpha);
  for (int m = 0; m <= n; ++m) {
    double acc = 0.0;
    for (int i = m; i <= n; ++i) {
      acc += spec.q.a[static_cast<std::size_t>(i)] * binomial(i, m) *
             moments[static_cast<std::size_t>(i - m)];
    }
    out.b.a[static_cast<std::size_t>(m)] = (m % 2 == 0 ? 1.0 : -1.0) * inv * acc + (m == 1 ? 1.0 : 0.0);
  }
  if (n == 0) out.b.a.push_back(1.0);  // the rho term survives a constant surrogate
  return out;
}

std::vector<double> real_roots(const PolynomialCoefficients& p) {
  std::vector<double> a = p.a;
  for (double v : a) {
    if (!std::isfinite(v)) throw NumericalError("polynomial has non-finite coefficients");
  }
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return {};
  while (!a.empty() && std::abs(a.back()) <= 1e-14 * scale) a.pop_back();
  const int m = static_cast<int>(a.size()) - 1;
  if (m < 1) return {};
  if (m == 1) return {-a[0] / a[1]};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) comp(i, m - 1) = -a[static_cast<std::size_t>(i)] / a.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalue solve failed");
  std::vector<double> roots;
  for (int i = 0; i < m; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-9) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

CvarMinimum minimize_polynomial(const PolynomialCoefficients& p, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("empty minimisation interval");
  std::vector<double> candidates{lo};
  for (double r : real_roots(p.derivative())) {
    if (r > lo && r < hi) candidates.push_back(r);
  }
  candidates.push_back(hi);
  CvarMinimum best{lo, p(lo)};
  for (double c : candidates) {
    const double v = p(c);
    if (v < best.value) best = {c, v};
  }
  return best;
}

CvarMinimum minimize_cvar_polynomial(const SmoothCvarPolynomial& p) {
  return minimize_polynomial(p.b, -p.half_width, p.half_width);
}

double cvar_regularized_objective(const TruncatedTensor& w, const TruncatedTensor& es,
                                  const CvarSurrogateSpec& spec, double lambda) {
  TruncatedTensor neg = w;
  neg *= -1.0;
  const auto poly = smooth_cvar_coefficients(neg, es, spec);
  const double norm = l2_norm(w);
  return minimize_cvar_polynomial(poly).value + 0.5 * lambda * norm * norm;
}

namespace {

// Sparse functional P with E[Q'(<-w,S> - rho*) <h,S>] = <P sh h, ES>, scaled
// by -1/(1 - alpha), and the level needed for the products.
struct GradientKernel {
  SparseTensor p;
  int level = 0;
};

GradientKernel gradient_kernel(const TruncatedTensor& w, const TruncatedTensor& es,
                               const CvarSurrogateSpec& spec) {
  TruncatedTensor neg = w;
  neg *= -1.0;
  const auto poly = smooth_cvar_coefficients(neg, es, spec);
  const double rho = minimize_cvar_polynomial(poly).rho;
  const auto dq = spec.q.derivative();
  auto c = shifted_coefficients(dq, rho);
  const double factor = -1.0 / (1.0 - spec.alpha);
  for (double& v : c) v *= factor;
  const int n = spec.q.degree();
  GradientKernel k;
  k.level = n * w.level();
  k.p = shuffle_series(SparseTensor::from_dense(neg), c, std::max(0, (n - 1) * w.level()));
  return k;
}

}  // namespace

double cvar_regularized_directional_derivative(const TruncatedTensor& w, const TruncatedTensor& h,
                                               const TruncatedTensor& es,
                                               const CvarSurrogateSpec& spec, double lambda) {
  if (h.dim() != w.dim() || h.level() != w.level()) {
    throw DataError("direction must match the functional's shape");
  }
  const auto k = gradient_kernel(w, es, spec);
  const auto prod = shuffle(k.p, SparseTensor::from_dense(h), k.level);
  return pairing(prod, es) + lambda * pairing(w, h);
}

TruncatedTensor cvar_regularized_gradient(const TruncatedTensor& w, const TruncatedTensor& es,
                                          const CvarSurrogateSpec& spec, double lambda) {
  const auto k = gradient_kernel(w, es, spec);
  TruncatedTensor grad(w.dim(), w.level());
  auto g = grad.coeffs();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    SparseTensor e(w.dim(), w.level());
    e.add(static_cast<std::uint64_t>(idx), 1.0);
    g[idx] = pairing(shuffle(k.p, e, k.level), es) + lambda * w.coeffs()[idx];
  }
  return grad;
}

DescentTrace cvar_gradient_descent(TruncatedTensor w0, const TruncatedTensor& es,
                                   const CvarSurrogateSpec& spec, double lambda, double step,
                                   int iterations) {
  if (!(step > 0.0)) throw ConfigError("descent step must be > 0");
  if (iterations < 0) throw ConfigError("descent iterations must be >= 0");
  DescentTrace trace;
  trace.w = std::move(w0);
  for (int it = 0; it <= iterations; ++it) {
    trace.objective.push_back(cvar_regularized_objective(trace.w, es, spec, lambda));
    const auto grad = cvar_regularized_gradient(trace.w, es, spec, lambda);
    trace.gradient_norm.push_back(l2_norm(grad));
    if (it == iterations) break;
    TruncatedTensor delta = grad;
    delta *= -step;
    trace.w += delta;
  }
  return trace;
}

void to_json(nlohmann::json& j, const SmoothCvarPolynomial& p) {
  j = nlohmann::json{{"b", p.b.a},
                     {"K", p.half_width},
                     {"alpha", p.alpha},
                     {"w", p.w},
                     {"es_level", p.es_level}};
}

}  // namespace sigtest
