#pragma once

// End-to-end synthetic experiments shared by the bench command and the
// acceptance suite. Each returns tidy rows ready for CSV output.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sigtest/datasets.hpp"
#include "sigtest/model_io.hpp"
#include "sigtest/multiple_testing.hpp"

namespace sigtest {

// Independent seed for a named sub-experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// Spearman rank correlation, ties averaged.
double spearman(std::span<const double> x, std::span<const double> y);

// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------

struct SpikeSweepConfig {
  std::vector<double> epsilons = default_spike_grid();
  int steps = 200;
  double horizon = 2.0;
  int level = 4;
  std::size_t n_fit = 1000;
  std::size_t n_normal = 500;
  std::size_t n_spiked = 500;
  std::uint64_t seed = 0;
  SpikeEnvelope envelope = SpikeEnvelope::kScaledCap;
  StatKind stat = StatKind::kDistance;
  std::vector<PathTransform> transforms;
  double ocsvm_nu = 0.1;
};

struct SpikeSweepRow {
  double epsilon = 0.0;
  double auroc = 0.0;
  double mean_score_normal = 0.0;
  double mean_score_spiked = 0.0;
};

struct SpikeSweepResult {
  std::vector<SpikeSweepRow> rows;
  double spearman = 0.0;
};

SpikeSweepResult run_spike_sweep(const SpikeSweepConfig& cfg);

// ---------------------------------------------------------------------------

enum class PvalueMethod { kEmpirical, kWeibull };
PvalueMethod parse_pvalue_method(const std::string& name);
std::string pvalue_method_name(PvalueMethod m);

struct ResearcherConfig {
  std::size_t researchers = 20;
  std::size_t n_reference = 400;    // fit sample
  std::size_t n_calibration = 400;  // empirical p-value sample
  std::size_t n_test_sets = 10;
  std::size_t test_size = 200;
  double outlier_fraction = 0.1;
  double epsilon = 4.0;
  int level = 4;
  int steps = 200;
  double horizon = 2.0;
  double alpha = 0.1;
  double raw_alpha = 0.01;
  Correction correction = Correction::kBh;
  double storey_lambda = 0.5;
  std::size_t weibull_sample = 5000;  // 0 skips the parametric arm
  double tail_fraction = 0.2;
  std::uint64_t seed = 0;
  SpikeEnvelope envelope = SpikeEnvelope::kScaledCap;
  StatKind stat = StatKind::kDistance;
  std::vector<PathTransform> transforms;
};

struct ResearcherRow {
  std::size_t researcher = 0;
  std::size_t test_set = 0;
  PvalueMethod method = PvalueMethod::kEmpirical;
  std::size_t rejections = 0;
  double fdp = 0.0;
  double power = 0.0;
  std::size_t raw_false_rejections = 0;
  std::size_t negatives = 0;
};

struct ResearcherSummary {
  PvalueMethod method = PvalueMethod::kEmpirical;
  double marginal_fdr = 0.0;  // mean false discovery proportion
  double marginal_fpr_raw = 0.0;  // pooled null rejection rate at raw_alpha
  double mean_power = 0.0;
  std::size_t tests = 0;
};

struct ResearcherResult {
  std::vector<ResearcherRow> rows;
  std::vector<ResearcherSummary> summaries;
};

ResearcherResult run_researcher_protocol(const ResearcherConfig& cfg);

// ---------------------------------------------------------------------------

struct TamsdConfig {
  std::size_t n_paths = 1000;
  int steps = 2048;
  double horizon = 1.0;
  std::vector<double> hursts = {0.25, 0.75};
  std::vector<int> lags = {1, 2, 4, 16, 512};
  std::vector<int> slope_lags = {1, 2, 4, 16};
  std::uint64_t seed = 0;
};

struct TamsdRow {
  std::string process;  // "bm" or "fbm"
  double hurst = 0.5;
  int lag = 0;
  double mean_tamsd = 0.0;
};

struct TamsdSlope {
  std::string process;
  double hurst = 0.5;
  double slope = 0.0;
};

struct TamsdResult {
  std::vector<TamsdRow> rows;
  std::vector<TamsdSlope> slopes;
  std::vector<std::string> warnings;  // lags skipped by the tau >= L guard
};

TamsdResult run_tamsd_comparison(const TamsdConfig& cfg);

// ---------------------------------------------------------------------------

struct StatComparisonConfig {
  std::vector<StatKind> stats = {StatKind::kDistance, StatKind::kConformance, StatKind::kOcsvm};
  std::vector<double> epsilons = {2.0, 4.0};
  int steps = 200;
  double horizon = 2.0;
  int level = 4;
  std::size_t n_fit = 400;
  std::size_t n_test = 200;  // per class
  double ocsvm_nu = 0.1;
  std::uint64_t seed = 0;
  SpikeEnvelope envelope = SpikeEnvelope::kScaledCap;
  std::vector<PathTransform> transforms;
};

struct StatComparisonRow {
  StatKind stat = StatKind::kDistance;
  double epsilon = 0.0;
  double auroc = 0.0;
};

std::vector<StatComparisonRow> run_stat_comparison(const StatComparisonConfig& cfg);

// ---------------------------------------------------------------------------

struct PvalueComparisonConfig {
  std::size_t n_fit = 1000;
  std::size_t n_calibration = 1000;
  std::size_t n_weibull = 5000;
  std::size_t n_null_test = 5000;
  std::vector<double> thresholds = {0.01, 0.05, 0.1};
  int level = 4;
  int steps = 200;
  double horizon = 2.0;
  double tail_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct PvalueComparisonRow {
  PvalueMethod method = PvalueMethod::kEmpirical;
  double threshold = 0.0;
  double rejection_rate = 0.0;  // fraction of null scores with p <= threshold
};

std::vector<PvalueComparisonRow> run_pvalue_comparison(const PvalueComparisonConfig& cfg);

// ---------------------------------------------------------------------------

struct CvarDemoConfig {
  std::size_t n_paths = 200;
  int dim = 2;
  int level = 2;
  // Even degrees >= 4 give the fitted surrogate a negative leading
  // coefficient, so the objective is unbounded below once <w,S> leaves
  // [-K, K]. Degree 2 keeps it convex.
  int degree = 2;
  double alpha = 0.9;
  double lambda = 1.0;
  double step = 0.05;
  int iterations = 30;
  int steps = 50;
  double horizon = 1.0;
  std::uint64_t seed = 0;
};

struct CvarDemoRow {
  int iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
};

std::vector<CvarDemoRow> run_cvar_demo(const CvarDemoConfig& cfg);

// ---------------------------------------------------------------------------
// Tidy CSV writers.

void write_csv(std::ostream& out, const SpikeSweepResult& r);
void write_csv(std::ostream& out, const ResearcherResult& r);
void write_summary_csv(std::ostream& out, const ResearcherResult& r);
void write_csv(std::ostream& out, const TamsdResult& r);
void write_slopes_csv(std::ostream& out, const TamsdResult& r);
void write_csv(std::ostream& out, const std::vector<StatComparisonRow>& rows);
void write_csv(std::ostream& out, const std::vector<PvalueComparisonRow>& rows);
void write_csv(std::ostream& out, const std::vector<CvarDemoRow>& rows);

}  // namespace sigtest
