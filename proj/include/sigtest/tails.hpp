#pragma once

// Tail bounds, rejection thresholds, tail fits and p-values.

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sigtest {

enum class DeviationKind { kQuadratic, kRde, kTable };

// Monotone deviation function a with a(0) = 0.
//   quadratic: a(t) = t^2
//   rde(q):    a(t) = min(t^2, t^{2q})
//   table:     piecewise-linear through (t_i, a_i), strictly increasing from
//              (0, 0), extended linearly with the final slope.
struct DeviationFunction {
  DeviationKind kind = DeviationKind::kQuadratic;
  double q = 1.0;
  std::vector<double> table_t;
  std::vector<double> table_a;

  static DeviationFunction quadratic() { return {}; }
  static DeviationFunction rde(double q);
  static DeviationFunction table(std::vector<double> t, std::vector<double> a);
};

double deviation(const DeviationFunction& f, double t);
double deviation_inverse(const DeviationFunction& f, double s);

DeviationKind parse_deviation_kind(const std::string& name);
std::string deviation_kind_name(DeviationKind kind);

struct TciParams {
  double p = 1.0;
  double gamma = 0.4;
  DeviationFunction deviation;
  double c1 = 1.0;
  double c2 = 1.0;
  // C(N) = growth^{N/2}; growth = 1 + rho_hat.
  double growth = 2.0;

  double growth_constant(int level) const;
  void validate() const;
};

// Form of the threshold exponent. kConservative uses the larger of the two
// powers of the log term (the closed form). kExactInverse uses the smaller,
// which inverts the bound exactly.
enum class ThresholdForm { kConservative, kExactInverse };

// r* = ||w|| sqrt(N) d^N C(N) F([(2 / C1^2) log(C2 / alpha)]), F(L) the max
// (or min) of L^{1/(2p)} and L^{N/(2p)}. Returns 0 when alpha >= C2.
double type1_threshold(double alpha, int level, int dim, double w_norm, const TciParams& tci,
                       ThresholdForm form = ThresholdForm::kConservative);

// C2 exp{-(C1^2 / 2) max(u^{2p}, u^{2p/N})} with u = r / (sqrt(N) d^N C(N) ||w||).
double type1_bound_raw(double r, int level, int dim, double w_norm, const TciParams& tci);
// Same, clipped to [0, 1].
double type1_bound(double r, int level, int dim, double w_norm, const TciParams& tci);

// Which power of N multiplies the type-II term.
enum class Type2Exponent { kProof, kStatement };  // N^{p/(2N)} or N^{1/(2Np)}

struct Type2Result {
  double value = 0.0;
  bool uninformative = false;
  bool small_entropy_case = false;  // a^{-1}(H) + E||X||^p <= 1
};

// max(0, 1 - (||w|| / r)^{p/N} C d^p N^e K) where with h = a^{-1}(H) + E||X||^p,
// K = 1 - 1/N + h/N when h <= 1 and K = h otherwise. H = inf gives 0 with
// the uninformative flag.
Type2Result type2_lower_bound(double r, int level, int dim, double w_norm, double relative_entropy,
                              double mean_holder_p, const TciParams& tci, double c_const,
                              Type2Exponent exponent = Type2Exponent::kProof);

struct TsbBound {
  double phi_bar = 0.0;      // upper normal tail at c_hat + r / K
  double exponential = 0.0;  // exp(-(c_hat + r / K)^2 / 2)
  bool exponential_valid = false;  // argument >= 0
};

TsbBound tsb_bound(double r, double c_hat, double k_embed);

double normal_upper_tail(double x);

// C1 = (2 (mean ||X||^p + C))^{-1/2}, C2 = mean exp(C1^2 / 2 ||X||^{2p}).
// Plug-in estimates only; the bound they feed is heuristic.
struct TciConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double mean_norm_p = 0.0;
};
TciConstants estimate_tci_constants(std::span<const double> holder_norms, double p, double c_const);

struct TailModelWeibull {
  double a = 0.0;
  double b = 0.0;
  int level = 0;
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t sample_size = 0;
  std::size_t tail_points = 0;
};

// Least squares of log S(r) = log A - B r^{2/N} over the top tail_fraction
// of the sorted scores, with S the empirical survival (i / (n + 1) style).
TailModelWeibull weibull_tail_fit(std::span<const double> scores, int level,
                                  double tail_fraction = 0.2);

// min(1, A exp(-B s^{2/N})) for s >= 0; 1 for s < 0.
double parametric_pvalue(double score, const TailModelWeibull& m);

// (1 + #{calibration >= score}) / (n + 1). Sorted calibration variant is O(log n).
double empirical_pvalue(double score, std::span<const double> calibration);
double empirical_pvalue_sorted(double score, std::span<const double> sorted_calibration);

void to_json(nlohmann::json& j, const DeviationFunction& f);
void from_json(const nlohmann::json& j, DeviationFunction& f);
void to_json(nlohmann::json& j, const TciParams& t);
void from_json(const nlohmann::json& j, TciParams& t);
void to_json(nlohmann::json& j, const TailModelWeibull& m);
void from_json(const nlohmann::json& j, TailModelWeibull& m);

}  // namespace sigtest
