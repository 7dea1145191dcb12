#include "sigtest/multiple_testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "sigtest/error.hpp"
#include "sigtest/signature.hpp"

namespace sigtest {

namespace {

void check_pvalues(std::span<const double> pvals) {
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("p-values must lie in [0, 1]");
  }
}

void check_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("significance level must lie in (0, 1)");
}

// Rejects every p <= p_(k*), k* = max{k : p_(k) <= k level / m}.
std::vector<bool> step_up(std::span<const double> pvals, double level) {
  const std::size_t m = pvals.size();
  std::vector<bool> out(m, false);
  std::vector<double> sorted(pvals.begin(), pvals.end());
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= static_cast<double>(k) * level / static_cast<double>(m)) {
      cutoff = sorted[k - 1];
      break;
    }
  }
  if (cutoff < 0.0) return out;
  for (std::size_t i = 0; i < m; ++i) out[i] = pvals[i] <= cutoff;
  return out;
}

}  // namespace

std::vector<bool> benjamini_hochberg(std::span<const double> pvals, double alpha) {
  check_level(alpha);
  check_pvalues(pvals);
  return step_up(pvals, alpha);
}

double storey_pi0(std::span<const double> pvals, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("Storey lambda must lie in (0, 1)");
  check_pvalues(pvals);
  if (pvals.empty()) return 1.0;
  const auto above = std::count_if(pvals.begin(), pvals.end(), [&](double p) { return p > lambda; });
  const double est = static_cast<double>(above) / ((1.0 - lambda) * static_cast<double>(pvals.size()));
  return std::min(1.0, est);
}

std::vector<bool> storey_bh(std::span<const double> pvals, double alpha, double lambda) {
  check_level(alpha);
  const double pi0 = storey_pi0(pvals, lambda);
  if (pi0 == 1.0) return benjamini_hochberg(pvals, alpha);
  if (pi0 == 0.0) return std::vector<bool>(pvals.size(), true);
  // alpha / pi0 may exceed 1; the step-up rule stays well defined.
  return step_up(pvals, alpha / pi0);
}

std::vector<bool> threshold_rejections(std::span<const double> pvals, double alpha) {
  check_level(alpha);
  check_pvalues(pvals);
  std::vector<bool> out(pvals.size());
  for (std::size_t i = 0; i < pvals.size(); ++i) out[i] = pvals[i] <= alpha;
  return out;
}

Correction parse_correction(const std::string& name) {
  if (name == "none") return Correction::kNone;
  if (name == "bh") return Correction::kBh;
  if (name == "storey") return Correction::kStorey;
  throw ConfigError("unknown correction '" + name + "' (expected none | bh | storey)");
}

std::string correction_name(Correction c) {
  switch (c) {
    case Correction::kNone:
      return "none";
    case Correction::kBh:
      return "bh";
    case Correction::kStorey:
      return "storey";
  }
  return "none";
}

std::vector<bool> apply_correction(std::span<const double> pvals, double alpha, Correction c,
                                   double lambda) {
  switch (c) {
    case Correction::kNone:
      return threshold_rejections(pvals, alpha);
    case Correction::kBh:
      return benjamini_hochberg(pvals, alpha);
    case Correction::kStorey:
      return storey_bh(pvals, alpha, lambda);
  }
  return {};
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0, neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      const int lab = labels[order[k]];
      if (lab == 1) {
        rank_sum += avg_rank;
        ++pos;
      } else if (lab == 0) {
        ++neg;
      } else {
        throw DataError("labels must be 0 or 1");
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

TestSummary evaluate(std::span<const double> scores, const std::vector<bool>& rejected,
                     std::span<const int> labels) {
  if (scores.size() != rejected.size()) throw DataError("scores and rejections differ in length");
  if (!labels.empty() && labels.size() != scores.size()) {
    throw DataError("labels and scores differ in length");
  }
  TestSummary s;
  s.items = scores.size();
  s.labelled = !labels.empty();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (rejected[i]) ++s.rejections;
    if (!s.labelled) continue;
    if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0 or 1");
    if (labels[i] == 1) {
      ++s.positives;
      if (rejected[i]) ++s.true_rejections;
    } else {
      ++s.negatives;
      if (rejected[i]) ++s.false_rejections;
    }
  }
  if (s.labelled) {
    s.fdr = static_cast<double>(s.false_rejections) / static_cast<double>(std::max<std::size_t>(1, s.rejections));
    s.fpr = s.negatives ? static_cast<double>(s.false_rejections) / static_cast<double>(s.negatives) : 0.0;
    s.power = s.positives ? static_cast<double>(s.true_rejections) / static_cast<double>(s.positives) : 0.0;
    s.auroc = auroc(scores, labels);
  } else {
    s.auroc = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

TestReport make_report(std::vector<std::string> ids, std::span<const double> scores,
                       std::span<const double> pvals, const std::vector<bool>& rejected,
                       std::span<const int> labels, double alpha, std::string pvalue_method,
                       std::string correction, std::optional<double> pi0) {
  const std::size_t n = scores.size();
  if (ids.size() != n || pvals.size() != n || rejected.size() != n) {
    throw DataError("report columns differ in length");
  }
  TestReport r;
  r.summary = evaluate(scores, rejected, labels);
  r.alpha = alpha;
  r.pvalue_method = std::move(pvalue_method);
  r.correction = std::move(correction);
  r.pi0 = pi0;
  r.items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.items[i] = {std::move(ids[i]), scores[i], pvals[i], rejected[i], labels.empty() ? -1 : labels[i]};
  }
  return r;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void to_json(nlohmann::json& j, const TestSummary& s) {
  j = nlohmann::json{{"items", s.items},
                     {"rejections", s.rejections},
                     {"labelled", s.labelled}};
  if (s.labelled) {
    j["positives"] = s.positives;
    j["negatives"] = s.negatives;
    j["true_rejections"] = s.true_rejections;
    j["false_rejections"] = s.false_rejections;
    j["fdr"] = s.fdr;
    j["fpr"] = s.fpr;
    j["power"] = s.power;
    j["auroc"] = number_or_null(s.auroc);
  }
}

void to_json(nlohmann::json& j, const TestReport& r) {
  j = nlohmann::json{{"alpha", r.alpha},
                     {"pvalue_method", r.pvalue_method},
                     {"correction", r.correction},
                     {"summary", r.summary}};
  if (r.pi0) j["pi0"] = *r.pi0;
}

void write_report_csv(std::ostream& out, const TestReport& r) {
  out << "id,score,pvalue,rejected,label\n";
  for (const auto& it : r.items) {
    out << it.id << ',' << format_double(it.score) << ',' << format_double(it.pvalue) << ','
        << (it.rejected ? 1 : 0) << ',';
    if (it.label >= 0) out << it.label;
    out << '\n';
  }
  const auto& s = r.summary;
  out << "# summary\n";
  out << "key,value\n";
  out << "alpha," << format_double(r.alpha) << '\n';
  out << "pvalue_method," << r.pvalue_method << '\n';
  out << "correction," << r.correction << '\n';
  if (r.pi0) out << "pi0," << format_double(*r.pi0) << '\n';
  out << "items," << s.items << '\n';
  out << "rejections," << s.rejections << '\n';
  if (s.labelled) {
    out << "positives," << s.positives << '\n';
    out << "negatives," << s.negatives << '\n';
    out << "fdr," << format_double(s.fdr) << '\n';
    out << "fpr," << format_double(s.fpr) << '\n';
    out << "power," << format_double(s.power) << '\n';
    out << "auroc," << (std::isfinite(s.auroc) ? format_double(s.auroc) : std::string("nan")) << '\n';
  }
}

}  // namespace sigtest
