#include "sigtest/tails.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigtest/error.hpp"

namespace sigtest {

DeviationFunction DeviationFunction::rde(double q) {
  if (!(q > 0.0)) throw ConfigError("rde deviation needs q > 0");
  DeviationFunction f;
  f.kind = DeviationKind::kRde;
  f.q = q;
  return f;
}

DeviationFunction DeviationFunction::table(std::vector<double> t, std::vector<double> a) {
  if (t.size() != a.size() || t.size() < 2) {
    throw ConfigError("deviation table needs at least two (t, a) pairs of equal length");
  }
  if (t.front() != 0.0 || a.front() != 0.0) throw ConfigError("deviation table must start at (0, 0)");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1]) || !(a[i] > a[i - 1])) {
      throw ConfigError("deviation table must be strictly increasing");
    }
  }
  DeviationFunction f;
  f.kind = DeviationKind::kTable;
  f.table_t = std::move(t);
  f.table_a = std::move(a);
  return f;
}

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  if (hi >= xs.size()) hi = xs.size() - 1;  // linear extension past the last knot
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  const double slope = (ys[hi] - ys[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + slope * (x - xs[lo]);
}

}  // namespace

double deviation(const DeviationFunction& f, double t) {
  if (!(t >= 0.0)) throw ConfigError("deviation argument must be >= 0");
  switch (f.kind) {
    case DeviationKind::kQuadratic:
      return t * t;
    case DeviationKind::kRde:
      return std::min(t * t, std::pow(t, 2.0 * f.q));
    case DeviationKind::kTable:
      return interpolate(f.table_t, f.table_a, t);
  }
  return 0.0;
}

double deviation_inverse(const DeviationFunction& f, double s) {
  if (!(s >= 0.0)) throw ConfigError("deviation inverse argument must be >= 0");
  if (s == std::numeric_limits<double>::infinity()) return s;
  switch (f.kind) {
    case DeviationKind::kQuadratic:
      return std::sqrt(s);
    case DeviationKind::kRde:
      return std::max(std::sqrt(s), std::pow(s, 1.0 / (2.0 * f.q)));
    case DeviationKind::kTable:
      return interpolate(f.table_a, f.table_t, s);
  }
  return 0.0;
}

DeviationKind parse_deviation_kind(const std::string& name) {
  if (name == "quadratic") return DeviationKind::kQuadratic;
  if (name == "rde") return DeviationKind::kRde;
  if (name == "table" || name == "custom") return DeviationKind::kTable;
  throw ConfigError("unknown deviation kind '" + name + "' (expected quadratic | rde | table)");
}

std::string deviation_kind_name(DeviationKind kind) {
  switch (kind) {
    case DeviationKind::kQuadratic:
      return "quadratic";
    case DeviationKind::kRde:
      return "rde";
    case DeviationKind::kTable:
      return "table";
  }
  return "quadratic";
}

double TciParams::growth_constant(int level) const {
  return std::pow(growth, 0.5 * static_cast<double>(level));
}

void TciParams::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("TCI exponent p must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("Hoelder exponent gamma must lie in (0, 1)");
  if (!(c1 > 0.0)) throw ConfigError("TCI constant C1 must be > 0");
  if (!(c2 >= 1.0)) throw ConfigError("TCI constant C2 must be >= 1");
  if (!(growth > 0.0)) throw ConfigError("growth constant must be > 0");
}

namespace {

double scale_factor(int level, int dim, double w_norm, const TciParams& tci) {
  if (level < 1) throw ConfigError("signature level must be >= 1");
  if (dim < 1) throw ConfigError("dimension must be >= 1");
  if (!(w_norm >= 0.0)) throw ConfigError("functional norm must be >= 0");
  return w_norm * std::sqrt(static_cast<double>(level)) * std::pow(static_cast<double>(dim), level) *
         tci.growth_constant(level);
}

}  // namespace

double type1_threshold(double alpha, int level, int dim, double w_norm, const TciParams& tci,
                       ThresholdForm form) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("significance level must lie in (0, 1)");
  tci.validate();
  const double scale = scale_factor(level, dim, w_norm, tci);
  if (alpha >= tci.c2) return 0.0;
  const double log_term = 2.0 / (tci.c1 * tci.c1) * std::log(tci.c2 / alpha);
  const double lo = std::pow(log_term, 1.0 / (2.0 * tci.p));
  const double hi = std::pow(log_term, static_cast<double>(level) / (2.0 * tci.p));
  const double f = form == ThresholdForm::kConservative ? std::max(lo, hi) : std::min(lo, hi);
  return scale * f;
}

double type1_bound_raw(double r, int level, int dim, double w_norm, const TciParams& tci) {
  if (!(r >= 0.0)) throw ConfigError("threshold r must be >= 0");
  tci.validate();
  const double scale = scale_factor(level, dim, w_norm, tci);
  if (scale == 0.0) return r > 0.0 ? 0.0 : tci.c2;
  const double u = r / scale;
  const double expo = std::max(std::pow(u, 2.0 * tci.p), std::pow(u, 2.0 * tci.p / level));
  return tci.c2 * std::exp(-0.5 * tci.c1 * tci.c1 * expo);
}

double type1_bound(double r, int level, int dim, double w_norm, const TciParams& tci) {
  return std::clamp(type1_bound_raw(r, level, dim, w_norm, tci), 0.0, 1.0);
}

Type2Result type2_lower_bound(double r, int level, int dim, double w_norm, double relative_entropy,
                              double mean_holder_p, const TciParams& tci, double c_const,
                              Type2Exponent exponent) {
  if (!(r > 0.0)) throw ConfigError("type-II bound needs r > 0");
  if (level < 1) throw ConfigError("signature level must be >= 1");
  if (!(relative_entropy >= 0.0)) throw ConfigError("relative entropy must be >= 0");
  if (!(mean_holder_p >= 0.0)) throw ConfigError("mean Hoelder moment must be >= 0");
  if (!(tci.p > 0.0 && tci.p <= 1.0)) throw ConfigError("TCI exponent p must lie in (0, 1]");
  Type2Result out;
  if (std::isinf(relative_entropy)) {
    out.uninformative = true;
    return out;
  }
  const double n = static_cast<double>(level);
  const double p = tci.p;
  const double h = deviation_inverse(tci.deviation, relative_entropy) + mean_holder_p;
  out.small_entropy_case = h <= 1.0;
  const double k = out.small_entropy_case ? 1.0 - 1.0 / n + h / n : h;
  const double e = exponent == Type2Exponent::kProof ? p / (2.0 * n) : 1.0 / (2.0 * n * p);
  const double term = std::pow(w_norm / r, p / n) * c_const * std::pow(static_cast<double>(dim), p) *
                      std::pow(n, e) * k;
  out.value = std::max(0.0, 1.0 - term);
  return out;
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

TsbBound tsb_bound(double r, double c_hat, double k_embed) {
  if (!(r >= 0.0)) throw ConfigError("TSB radius must be >= 0");
  if (!(k_embed > 0.0)) throw ConfigError("TSB embedding constant K must be > 0");
  const double x = c_hat + r / k_embed;
  TsbBound out;
  out.phi_bar = normal_upper_tail(x);
  out.exponential = std::exp(-0.5 * x * x);
  out.exponential_valid = x >= 0.0;
  return out;
}

TciConstants estimate_tci_constants(std::span<const double> holder_norms, double p, double c_const) {
  if (holder_norms.empty()) throw DataError("no Hoelder norms for the constant estimate");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("TCI exponent p must lie in (0, 1]");
  if (!(c_const > 0.0)) throw ConfigError("deviation constant C must be > 0");
  double mean_p = 0.0;
  for (double v : holder_norms) mean_p += std::pow(v, p);
  mean_p /= static_cast<double>(holder_norms.size());
  TciConstants out;
  out.mean_norm_p = mean_p;
  out.c1 = 1.0 / std::sqrt(2.0 * (mean_p + c_const));
  double acc = 0.0;
  for (double v : holder_norms) acc += std::exp(0.5 * out.c1 * out.c1 * std::pow(v, 2.0 * p));
  out.c2 = std::max(1.0, acc / static_cast<double>(holder_norms.size()));
  if (!std::isfinite(out.c2)) throw NumericalError("exponential moment overflowed");
  return out;
}

TailModelWeibull weibull_tail_fit(std::span<const double> scores, int level, double tail_fraction) {
  if (level < 1) throw ConfigError("signature level must be >= 1");
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.5)) {
    throw ConfigError("tail fraction must lie in (0, 0.5]");
  }
  if (scores.size() < 100) throw DataError("Weibull tail fit needs at least 100 scores");
  std::vector<double> z(scores.begin(), scores.end());
  for (double v : z) {
    if (!std::isfinite(v)) throw DataError("scores contain a non-finite value");
  }
  std::sort(z.begin(), z.end());
  const std::size_t n = z.size();
  const auto k = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(n)));
  if (k < 10) throw DataError("Weibull tail fit needs at least 10 tail points");
  if (z[n - k] < 0.0) throw DataError("Weibull tail fit needs nonnegative tail scores");

  const double expo = 2.0 / static_cast<double>(level);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = n - k; i < n; ++i) {
    const double x = std::pow(z[i], expo);
    // Survival estimate at the (i+1)-th smallest score.
    const double y = std::log(static_cast<double>(n - i) / static_cast<double>(n + 1));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double kk = static_cast<double>(k);
  const double var = sxx - sx * sx / kk;
  if (!(var > 1e-14 * std::max(1.0, sxx))) throw DataError("tail scores are degenerate (constant)");
  const double slope = (sxy - sx * sy / kk) / var;
  const double intercept = (sy - slope * sx) / kk;

  TailModelWeibull m;
  m.b = -slope;
  m.a = std::exp(intercept);
  m.level = level;
  m.r_min = z[n - k];
  m.r_max = z[n - 1];
  m.sample_size = n;
  m.tail_points = k;
  if (!(m.b > 0.0)) throw NumericalError("Weibull tail fit produced a non-positive rate B");
  return m;
}

double parametric_pvalue(double score, const TailModelWeibull& m) {
  if (!(m.a > 0.0 && m.b > 0.0) || m.level < 1) throw DataError("tail model is not fitted");
  if (std::isnan(score)) throw DataError("score is NaN");
  if (score < 0.0) return 1.0;
  return std::min(1.0, m.a * std::exp(-m.b * std::pow(score, 2.0 / m.level)));
}

double empirical_pvalue_sorted(double score, std::span<const double> sorted_calibration) {
  if (sorted_calibration.empty()) throw DataError("empty calibration sample");
  const auto it = std::lower_bound(sorted_calibration.begin(), sorted_calibration.end(), score);
  const auto count = static_cast<double>(sorted_calibration.end() - it);
  return (1.0 + count) / (static_cast<double>(sorted_calibration.size()) + 1.0);
}

double empirical_pvalue(double score, std::span<const double> calibration) {
  if (calibration.empty()) throw DataError("empty calibration sample");
  std::size_t count = 0;
  for (double c : calibration) count += c >= score ? 1 : 0;
  return (1.0 + static_cast<double>(count)) / (static_cast<double>(calibration.size()) + 1.0);
}

void to_json(nlohmann::json& j, const DeviationFunction& f) {
  j = nlohmann::json{{"kind", deviation_kind_name(f.kind)}};
  if (f.kind == DeviationKind::kRde) j["q"] = f.q;
  if (f.kind == DeviationKind::kTable) {
    j["t"] = f.table_t;
    j["a"] = f.table_a;
  }
}

void from_json(const nlohmann::json& j, DeviationFunction& f) {
  const auto kind = parse_deviation_kind(j.at("kind").get<std::string>());
  if (kind == DeviationKind::kQuadratic) {
    f = DeviationFunction::quadratic();
  } else if (kind == DeviationKind::kRde) {
    f = DeviationFunction::rde(j.at("q").get<double>());
  } else {
    f = DeviationFunction::table(j.at("t").get<std::vector<double>>(),
                                 j.at("a").get<std::vector<double>>());
  }
}

void to_json(nlohmann::json& j, const TciParams& t) {
  j = nlohmann::json{{"p", t.p},   {"gamma", t.gamma}, {"deviation", t.deviation},
                     {"C1", t.c1}, {"C2", t.c2},       {"growth", t.growth}};
}

void from_json(const nlohmann::json& j, TciParams& t) {
  t.p = j.at("p").get<double>();
  t.gamma = j.at("gamma").get<double>();
  t.deviation = j.at("deviation").get<DeviationFunction>();
  t.c1 = j.at("C1").get<double>();
  t.c2 = j.at("C2").get<double>();
  t.growth = j.value("growth", 2.0);
  t.validate();
}

void to_json(nlohmann::json& j, const TailModelWeibull& m) {
  j = nlohmann::json{{"kind", "weibull"},       {"A", m.a},         {"B", m.b},
                     {"N", m.level},            {"r_min", m.r_min}, {"r_max", m.r_max},
                     {"sample_size", m.sample_size}, {"tail_points", m.tail_points}};
}

void from_json(const nlohmann::json& j, TailModelWeibull& m) {
  m.a = j.at("A").get<double>();
  m.b = j.at("B").get<double>();
  m.level = j.at("N").get<int>();
  m.r_min = j.value("r_min", 0.0);
  m.r_max = j.value("r_max", 0.0);
  m.sample_size = j.value("sample_size", std::size_t{0});
  m.tail_points = j.value("tail_points", std::size_t{0});
  if (!(m.a > 0.0 && m.b > 0.0) || m.level < 1) throw DataError("invalid Weibull tail model");
}

}  // namespace sigtest
