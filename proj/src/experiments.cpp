#include "sigtest/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "sigtest/cvar.hpp"
#include "sigtest/error.hpp"
#include "sigtest/tails.hpp"

namespace sigtest {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x5EEDULL));
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r[order[k]] = avg;
    i = j;
  }
  return r;
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<PathStream> null_paths(std::size_t n, int steps, double horizon, std::uint64_t seed,
                                   const std::string& prefix) {
  BmConfig bm;
  bm.n_paths = n;
  bm.steps = steps;
  bm.horizon = horizon;
  bm.dim = 1;
  bm.seed = seed;
  bm.id_prefix = prefix;
  return simulate_bm(bm);
}

std::vector<PathStream> spiked_paths(std::size_t n, double epsilon, int steps, double horizon,
                                     SpikeEnvelope envelope, std::uint64_t seed,
                                     const std::string& prefix) {
  SpikeConfig sc;
  sc.epsilon = epsilon;
  sc.steps = steps;
  sc.horizon = horizon;
  sc.envelope = envelope;
  return simulate_spiked_bm(sc, n, seed, 0, prefix);
}

double auroc_of(std::span<const double> normal, std::span<const double> spiked) {
  std::vector<double> scores(normal.begin(), normal.end());
  scores.insert(scores.end(), spiked.begin(), spiked.end());
  std::vector<int> labels(normal.size(), 0);
  labels.insert(labels.end(), spiked.size(), 1);
  return auroc(scores, labels);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("spearman needs two equal-length samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("slope needs two equal-length samples");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DataError("log-log slope needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------------------

SpikeSweepResult run_spike_sweep(const SpikeSweepConfig& cfg) {
  FitOptions fo;
  fo.level = cfg.level;
  fo.transforms = cfg.transforms;
  fo.ocsvm_nu = cfg.ocsvm_nu;
  const auto fit = null_paths(cfg.n_fit, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 1), "fit");
  const auto model = fit_score_model(cfg.stat, fit, fo);
  const auto normal = null_paths(cfg.n_normal, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 2), "normal");
  const auto normal_scores = model.score(normal);

  SpikeSweepResult out;
  std::vector<double> eps, aucs;
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    const double e = cfg.epsilons[k];
    const auto spiked = spiked_paths(cfg.n_spiked, e, cfg.steps, cfg.horizon, cfg.envelope,
                                     derive_seed(cfg.seed, 100 + k), "spiked");
    const auto spiked_scores = model.score(spiked);
    SpikeSweepRow row;
    row.epsilon = e;
    row.auroc = auroc_of(normal_scores, spiked_scores);
    row.mean_score_normal = mean(normal_scores);
    row.mean_score_spiked = mean(spiked_scores);
    out.rows.push_back(row);
    eps.push_back(e);
    aucs.push_back(row.auroc);
  }
  out.spearman = eps.size() >= 2 ? spearman(eps, aucs) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------

PvalueMethod parse_pvalue_method(const std::string& name) {
  if (name == "empirical") return PvalueMethod::kEmpirical;
  if (name == "weibull") return PvalueMethod::kWeibull;
  throw ConfigError("unknown p-value method '" + name + "' (expected empirical | weibull)");
}

std::string pvalue_method_name(PvalueMethod m) {
  return m == PvalueMethod::kEmpirical ? "empirical" : "weibull";
}

ResearcherResult run_researcher_protocol(const ResearcherConfig& cfg) {
  if (!(cfg.outlier_fraction >= 0.0 && cfg.outlier_fraction <= 1.0)) {
    throw ConfigError("outlier fraction must lie in [0, 1]");
  }
  const auto n_out = static_cast<std::size_t>(std::llround(cfg.outlier_fraction * static_cast<double>(cfg.test_size)));
  const std::size_t n_in = cfg.test_size - n_out;
  FitOptions fo;
  fo.level = cfg.level;
  fo.transforms = cfg.transforms;

  std::vector<PvalueMethod> methods{PvalueMethod::kEmpirical};
  if (cfg.weibull_sample > 0) methods.push_back(PvalueMethod::kWeibull);

  ResearcherResult out;
  for (std::size_t j = 0; j < cfg.researchers; ++j) {
    const std::uint64_t rs = derive_seed(cfg.seed, 1000 + j);
    const auto reference = null_paths(cfg.n_reference, cfg.steps, cfg.horizon, derive_seed(rs, 1), "ref");
    const auto model = fit_score_model(cfg.stat, reference, fo);
    auto calibration = model.score(
        null_paths(cfg.n_calibration, cfg.steps, cfg.horizon, derive_seed(rs, 2), "cal"));
    std::sort(calibration.begin(), calibration.end());
    TailModelWeibull tail;
    if (cfg.weibull_sample > 0) {
      const auto tail_scores = model.score(
          null_paths(cfg.weibull_sample, cfg.steps, cfg.horizon, derive_seed(rs, 3), "tail"));
      tail = weibull_tail_fit(tail_scores, cfg.level, cfg.tail_fraction);
    }

    for (std::size_t l = 0; l < cfg.n_test_sets; ++l) {
      const auto normal = null_paths(n_in, cfg.steps, cfg.horizon, derive_seed(rs, 100 + 2 * l), "in");
      const auto spiked = spiked_paths(n_out, cfg.epsilon, cfg.steps, cfg.horizon, cfg.envelope,
                                       derive_seed(rs, 101 + 2 * l), "out");
      std::vector<double> scores = model.score(normal);
      const auto s2 = model.score(spiked);
      scores.insert(scores.end(), s2.begin(), s2.end());
      std::vector<int> labels(n_in, 0);
      labels.insert(labels.end(), n_out, 1);

      for (auto method : methods) {
        std::vector<double> p(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
          p[i] = method == PvalueMethod::kEmpirical ? empirical_pvalue_sorted(scores[i], calibration)
                                                    : parametric_pvalue(scores[i], tail);
        }
        const auto rej = apply_correction(p, cfg.alpha, cfg.correction, cfg.storey_lambda);
        const auto s = evaluate(scores, rej, labels);
        ResearcherRow row;
        row.researcher = j;
        row.test_set = l;
        row.method = method;
        row.rejections = s.rejections;
        row.fdp = s.fdr;
        row.power = s.power;
        row.negatives = s.negatives;
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (labels[i] == 0 && p[i] <= cfg.raw_alpha) ++row.raw_false_rejections;
        }
        out.rows.push_back(row);
      }
    }
  }

  for (auto method : methods) {
    ResearcherSummary s;
    s.method = method;
    std::size_t fp = 0, neg = 0;
    for (const auto& r : out.rows) {
      if (r.method != method) continue;
      s.marginal_fdr += r.fdp;
      s.mean_power += r.power;
      fp += r.raw_false_rejections;
      neg += r.negatives;
      ++s.tests;
    }
    if (s.tests) {
      s.marginal_fdr /= static_cast<double>(s.tests);
      s.mean_power /= static_cast<double>(s.tests);
    }
    s.marginal_fpr_raw = neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0;
    out.summaries.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

TamsdResult run_tamsd_comparison(const TamsdConfig& cfg) {
  struct Process {
    std::string name;
    double hurst;
    std::vector<PathStream> paths;
  };
  std::vector<Process> processes;
  {
    BmConfig bm;
    bm.n_paths = cfg.n_paths;
    bm.steps = cfg.steps;
    bm.horizon = cfg.horizon;
    bm.seed = derive_seed(cfg.seed, 1);
    processes.push_back({"bm", 0.5, simulate_bm(bm)});
  }
  for (std::size_t h = 0; h < cfg.hursts.size(); ++h) {
    processes.push_back({"fbm", cfg.hursts[h],
                         simulate_fbm(cfg.hursts[h], cfg.n_paths, cfg.steps, cfg.horizon,
                                      derive_seed(cfg.seed, 10 + h))});
  }

  TamsdResult out;
  for (const auto& proc : processes) {
    std::vector<double> xs, ys;
    for (int lag : cfg.lags) {
      if (lag >= cfg.steps) {
        out.warnings.push_back("lag " + std::to_string(lag) + " >= path length " +
                               std::to_string(cfg.steps) + " for " + proc.name + "; row skipped");
        continue;
      }
      double acc = 0.0;
      for (const auto& p : proc.paths) acc += tamsd(p, lag);
      TamsdRow row{proc.name, proc.hurst, lag, acc / static_cast<double>(proc.paths.size())};
      out.rows.push_back(row);
      if (std::find(cfg.slope_lags.begin(), cfg.slope_lags.end(), lag) != cfg.slope_lags.end()) {
        xs.push_back(lag);
        ys.push_back(row.mean_tamsd);
      }
    }
    if (xs.size() >= 2) out.slopes.push_back({proc.name, proc.hurst, loglog_slope(xs, ys)});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<StatComparisonRow> run_stat_comparison(const StatComparisonConfig& cfg) {
  const auto fit = null_paths(cfg.n_fit, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 1), "fit");
  const auto normal = null_paths(cfg.n_test, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 2), "normal");
  std::vector<std::vector<PathStream>> spiked;
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    spiked.push_back(spiked_paths(cfg.n_test, cfg.epsilons[k], cfg.steps, cfg.horizon, cfg.envelope,
                                  derive_seed(cfg.seed, 100 + k), "spiked"));
  }
  FitOptions fo;
  fo.level = cfg.level;
  fo.transforms = cfg.transforms;
  fo.ocsvm_nu = cfg.ocsvm_nu;
  std::vector<StatComparisonRow> out;
  for (auto stat : cfg.stats) {
    const auto model = fit_score_model(stat, fit, fo);
    const auto ns = model.score(normal);
    for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
      out.push_back({stat, cfg.epsilons[k], auroc_of(ns, model.score(spiked[k]))});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PvalueComparisonRow> run_pvalue_comparison(const PvalueComparisonConfig& cfg) {
  FitOptions fo;
  fo.level = cfg.level;
  const auto model = fit_score_model(
      StatKind::kDistance, null_paths(cfg.n_fit, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 1), "fit"), fo);
  auto cal = model.score(null_paths(cfg.n_calibration, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 2), "cal"));
  std::sort(cal.begin(), cal.end());
  const auto tail = weibull_tail_fit(
      model.score(null_paths(cfg.n_weibull, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 3), "tail")),
      cfg.level, cfg.tail_fraction);
  const auto test = model.score(null_paths(cfg.n_null_test, cfg.steps, cfg.horizon, derive_seed(cfg.seed, 4), "test"));

  std::vector<PvalueComparisonRow> out;
  for (auto method : {PvalueMethod::kEmpirical, PvalueMethod::kWeibull}) {
    std::vector<double> p;
    for (double s : test) {
      p.push_back(method == PvalueMethod::kEmpirical ? empirical_pvalue_sorted(s, cal)
                                                     : parametric_pvalue(s, tail));
    }
    for (double t : cfg.thresholds) {
      const auto hits = std::count_if(p.begin(), p.end(), [&](double v) { return v <= t; });
      out.push_back({method, t, static_cast<double>(hits) / static_cast<double>(p.size())});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<CvarDemoRow> run_cvar_demo(const CvarDemoConfig& cfg) {
  BmConfig bm;
  bm.n_paths = cfg.n_paths;
  bm.steps = cfg.steps;
  bm.horizon = cfg.horizon;
  bm.dim = cfg.dim;
  bm.seed = derive_seed(cfg.seed, 1);
  const auto paths = simulate_bm(bm);
  const int es_level = cfg.degree * cfg.level;
  const auto es = fit_expected_signature(paths, es_level).mean;

  TruncatedTensor w0(cfg.dim, cfg.level);
  for (auto& c : w0.coeffs()) c = 0.1;
  double max_abs = 0.0;
  for (const auto& p : paths) {
    max_abs = std::max(max_abs, std::abs(pairing(w0, signature(p, cfg.level).tensor())));
  }
  CvarSurrogateSpec spec;
  spec.half_width = std::max(1.0, 2.0 * max_abs);
  spec.alpha = cfg.alpha;
  spec.q = fit_max_surrogate(cfg.degree, spec.half_width).poly;

  const auto trace = cvar_gradient_descent(w0, es, spec, cfg.lambda, cfg.step, cfg.iterations);
  std::vector<CvarDemoRow> out;
  for (std::size_t i = 0; i < trace.objective.size(); ++i) {
    out.push_back({static_cast<int>(i), trace.objective[i], trace.gradient_norm[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const SpikeSweepResult& r) {
  out << "epsilon,auroc,mean_score_normal,mean_score_spiked\n";
  for (const auto& row : r.rows) {
    out << format_double(row.epsilon) << ',' << format_double(row.auroc) << ','
        << format_double(row.mean_score_normal) << ',' << format_double(row.mean_score_spiked) << '\n';
  }
}

void write_csv(std::ostream& out, const ResearcherResult& r) {
  out << "researcher,test_set,method,rejections,fdp,power,raw_false_rejections,negatives\n";
  for (const auto& row : r.rows) {
    out << row.researcher << ',' << row.test_set << ',' << pvalue_method_name(row.method) << ','
        << row.rejections << ',' << format_double(row.fdp) << ',' << format_double(row.power) << ','
        << row.raw_false_rejections << ',' << row.negatives << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ResearcherResult& r) {
  out << "method,tests,marginal_fdr,marginal_fpr_raw,mean_power\n";
  for (const auto& s : r.summaries) {
    out << pvalue_method_name(s.method) << ',' << s.tests << ',' << format_double(s.marginal_fdr) << ','
        << format_double(s.marginal_fpr_raw) << ',' << format_double(s.mean_power) << '\n';
  }
}

void write_csv(std::ostream& out, const TamsdResult& r) {
  out << "process,hurst,lag,mean_tamsd\n";
  for (const auto& row : r.rows) {
    out << row.process << ',' << format_double(row.hurst) << ',' << row.lag << ','
        << format_double(row.mean_tamsd) << '\n';
  }
}

void write_slopes_csv(std::ostream& out, const TamsdResult& r) {
  out << "process,hurst,slope\n";
  for (const auto& s : r.slopes) {
    out << s.process << ',' << format_double(s.hurst) << ',' << format_double(s.slope) << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<StatComparisonRow>& rows) {
  out << "stat,epsilon,auroc\n";
  for (const auto& row : rows) {
    out << stat_kind_name(row.stat) << ',' << format_double(row.epsilon) << ','
        << format_double(row.auroc) << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<PvalueComparisonRow>& rows) {
  out << "method,threshold,rejection_rate\n";
  for (const auto& row : rows) {
    out << pvalue_method_name(row.method) << ',' << format_double(row.threshold) << ','
        << format_double(row.rejection_rate) << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<CvarDemoRow>& rows) {
  out << "iteration,objective,gradient_norm\n";
  for (const auto& row : rows) {
    out << row.iteration << ',' << format_double(row.objective) << ','
        << format_double(row.gradient_norm) << '\n';
  }
}

}  // namespace sigtest
