#pragma once

// Multiple-testing corrections and error-rate summaries.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sigtest {

// Step-up rule: rejects every p-value <= p_(k*), k* = max{k : p_(k) <= k alpha / m}.
std::vector<bool> benjamini_hochberg(std::span<const double> pvals, double alpha);

// min(1, #{p > lambda} / ((1 - lambda) m)).
double storey_pi0(std::span<const double> pvals, double lambda = 0.5);

// Benjamini-Hochberg at level alpha / pi0.
std::vector<bool> storey_bh(std::span<const double> pvals, double alpha, double lambda = 0.5);

// p <= alpha, no correction.
std::vector<bool> threshold_rejections(std::span<const double> pvals, double alpha);

enum class Correction { kNone, kBh, kStorey };
Correction parse_correction(const std::string& name);
std::string correction_name(Correction c);

std::vector<bool> apply_correction(std::span<const double> pvals, double alpha, Correction c,
                                   double lambda = 0.5);

// Rank AUROC of positives (label 1) against negatives (label 0), ties
// averaged. NaN when either class is empty.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct TestItem {
  std::string id;
  double score = 0.0;
  double pvalue = 1.0;
  bool rejected = false;
  int label = -1;  // -1 when unknown
};

struct TestSummary {
  std::size_t items = 0;
  std::size_t rejections = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t true_rejections = 0;
  std::size_t false_rejections = 0;
  bool labelled = false;
  double fdr = 0.0;
  double fpr = 0.0;
  double power = 0.0;
  double auroc = 0.0;
};

struct TestReport {
  std::vector<TestItem> items;
  TestSummary summary;
  double alpha = 0.0;
  std::string pvalue_method;
  std::string correction;
  std::optional<double> pi0;
};

// Computes summary counts and rates. labels may be empty (unlabelled run);
// otherwise its length must match. FDR uses max(1, rejections).
TestSummary evaluate(std::span<const double> scores, const std::vector<bool>& rejected,
                     std::span<const int> labels);

TestReport make_report(std::vector<std::string> ids, std::span<const double> scores,
                       std::span<const double> pvals, const std::vector<bool>& rejected,
                       std::span<const int> labels, double alpha, std::string pvalue_method,
                       std::string correction, std::optional<double> pi0 = std::nullopt);

void to_json(nlohmann::json& j, const TestSummary& s);
void to_json(nlohmann::json& j, const TestReport& r);

// One row per item (id, score, pvalue, rejected, label) followed by a
// "# summary" block of key,value rows.
void write_report_csv(std::ostream& out, const TestReport& r);

}  // namespace sigtest
