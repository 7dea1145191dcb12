#include "sigtest/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigtest/error.hpp"
#include "sigtest/simd/kernels.hpp"

namespace sigtest {

namespace {

void check_compatible(const TruncatedSignature& sig, int dim, int level, const char* what) {
  if (sig.dim() != dim || sig.level() != level) {
    throw DataError(std::string(what) + ": signature (d=" + std::to_string(sig.dim()) +
                    ", N=" + std::to_string(sig.level()) + ") does not match model (d=" +
                    std::to_string(dim) + ", N=" + std::to_string(level) + ")");
  }
}

void check_path_dim(const PathStream& x, int dim, const char* what) {
  if (x.dim() != dim) {
    throw DataError(std::string(what) + ": path dimension " + std::to_string(x.dim()) +
                    " does not match model dimension " + std::to_string(dim));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Expected signature

ExpectedSignatureModel fit_expected_signature(std::span<const PathStream> paths, int level,
                                              bool retain_corpus) {
  if (paths.empty()) throw DataError("cannot fit an expected signature on an empty sample");
  const int dim = paths.front().dim();
  ExpectedSignatureModel model;
  model.level = level;
  model.dim = dim;
  model.sample_count = paths.size();
  model.mean = TruncatedTensor(dim, level);
  for (const auto& p : paths) {
    check_path_dim(p, dim, "fit_expected_signature");
    model.mean += signature(p, level).tensor();
  }
  model.mean *= 1.0 / static_cast<double>(paths.size());
  model.mean.coeffs()[0] = 1.0;
  model.mean_sq_norm = pairing(model.mean, model.mean);

  if (retain_corpus) {
    model.corpus.assign(paths.begin(), paths.end());
    const auto sigs = signatures(paths, level);
    double acc = 0.0;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      acc += pairing(sigs[i].tensor(), sigs[i].tensor());
      for (std::size_t j = i + 1; j < sigs.size(); ++j) {
        acc += 2.0 * pairing(sigs[i].tensor(), sigs[j].tensor());
      }
    }
    const double n = static_cast<double>(sigs.size());
    model.mean_pair_kernel = acc / (n * n);
  }
  return model;
}

double distance_to_mean(const TruncatedSignature& sig, const ExpectedSignatureModel& model) {
  check_compatible(sig, model.dim, model.level, "distance_to_mean");
  return std::sqrt(simd::squared_distance(sig.tensor().coeffs(), model.mean.coeffs()));
}

double distance_to_mean(const PathStream& x, const ExpectedSignatureModel& model) {
  check_path_dim(x, model.dim, "distance_to_mean");
  return distance_to_mean(signature(x, model.level), model);
}

double distance_to_mean_kernel(const PathStream& x, const ExpectedSignatureModel& model) {
  if (!model.has_corpus()) throw DataError("kernel-trick distance needs a retained corpus");
  check_path_dim(x, model.dim, "distance_to_mean_kernel");
  double cross = 0.0;
  for (const auto& y : model.corpus) cross += truncated_sig_kernel(y, x, model.level);
  cross /= static_cast<double>(model.corpus.size());
  const double self = truncated_sig_kernel(x, x, model.level);
  return std::sqrt(std::max(0.0, self - 2.0 * cross + model.mean_pair_kernel));
}

// ---------------------------------------------------------------------------
// Conformance

double spectral_norm_psd(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw DataError("covariance must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DataError("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw DataError("covariance is not positive semidefinite");
  }
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

ConformanceModel make_conformance_model(std::vector<TruncatedTensor> corpus,
                                        Eigen::MatrixXd covariance, double ridge) {
  if (corpus.empty()) throw DataError("conformance corpus is empty");
  if (ridge < 0.0) throw ConfigError("conformance ridge must be >= 0");
  const auto n = static_cast<Eigen::Index>(corpus.front().size());
  if (covariance.rows() != n || covariance.cols() != n) {
    throw DataError("covariance size does not match the tensor coordinate count");
  }
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DataError("covariance is not symmetric");
  }

  ConformanceModel model;
  model.level = corpus.front().level();
  model.dim = corpus.front().dim();
  model.ridge = ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw DataError("covariance is not positive semidefinite");
  }
  model.eigenvalues = es.eigenvalues().cwiseMax(0.0);
  model.eigenvectors = es.eigenvectors();
  model.covariance = std::move(covariance);

  model.whitened_corpus.resize(n, static_cast<Eigen::Index>(corpus.size()));
  for (std::size_t c = 0; c < corpus.size(); ++c) {
    if (corpus[c].dim() != model.dim || corpus[c].level() != model.level) {
      throw DataError("conformance corpus tensors must share dimension and level");
    }
    Eigen::Map<const Eigen::VectorXd> v(corpus[c].coeffs().data(), n);
    Eigen::VectorXd proj = model.eigenvectors.transpose() * v;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double denom = model.eigenvalues(k) + ridge;
      proj(k) = denom > 0.0 ? proj(k) / std::sqrt(denom) : 0.0;
    }
    model.whitened_corpus.col(static_cast<Eigen::Index>(c)) = proj;
  }
  model.corpus = std::move(corpus);
  return model;
}

ConformanceModel fit_conformance(std::span<const PathStream> corpus, int level, double ridge) {
  if (corpus.empty()) throw DataError("conformance corpus is empty");
  const int dim = corpus.front().dim();
  std::vector<TruncatedTensor> tensors;
  tensors.reserve(corpus.size());
  for (const auto& p : corpus) {
    check_path_dim(p, dim, "fit_conformance");
    tensors.push_back(signature(p, level).tensor());
  }
  const auto n = static_cast<Eigen::Index>(tensors.front().size());
  const auto m = static_cast<Eigen::Index>(tensors.size());
  Eigen::MatrixXd data(n, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    data.col(c) = Eigen::Map<const Eigen::VectorXd>(tensors[static_cast<std::size_t>(c)].coeffs().data(), n);
  }
  const Eigen::VectorXd mean = data.rowwise().mean();
  data.colwise() -= mean;
  Eigen::MatrixXd cov = (data * data.transpose()) / static_cast<double>(m);
  cov = 0.5 * (cov + cov.transpose());
  if (ridge < 0.0) ridge = 1e-8 * cov.trace() / static_cast<double>(n);
  return make_conformance_model(std::move(tensors), std::move(cov), ridge);
}

namespace {

// Whitened coordinates of v, or nullopt-like flag when v leaves the range of
// a singular covariance without ridge.
bool whiten(std::span<const double> v, const ConformanceModel& model, Eigen::VectorXd& out) {
  const auto n = static_cast<Eigen::Index>(model.coordinates());
  if (static_cast<Eigen::Index>(v.size()) != n) {
    throw DataError("vector size does not match conformance model coordinates");
  }
  Eigen::Map<const Eigen::VectorXd> vec(v.data(), n);
  out = model.eigenvectors.transpose() * vec;
  const double lambda_max = model.eigenvalues.size() ? model.eigenvalues.maxCoeff() : 0.0;
  const double null_tol = 1e-12 * std::max(1.0, lambda_max) * static_cast<double>(n);
  const double range_tol = 1e-9 * (vec.norm() + 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lambda = model.eigenvalues(k);
    if (model.ridge == 0.0 && lambda <= null_tol) {
      if (std::abs(out(k)) > range_tol) return false;
      out(k) = 0.0;
      continue;
    }
    out(k) /= std::sqrt(lambda + model.ridge);
  }
  return true;
}

}  // namespace

double variance_norm(std::span<const double> v, const ConformanceModel& model) {
  Eigen::VectorXd w;
  if (!whiten(v, model, w)) return std::numeric_limits<double>::infinity();
  return w.norm();
}

double variance_norm(const TruncatedTensor& v, const ConformanceModel& model) {
  return variance_norm(v.coeffs(), model);
}

double conformance_score(const TruncatedTensor& sig, const ConformanceModel& model) {
  if (model.corpus.empty()) throw DataError("conformance model has an empty corpus");
  if (model.ridge == 0.0) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : model.corpus) best = std::min(best, variance_norm(sig - y, model));
    return best;
  }
  Eigen::VectorXd w;
  whiten(sig.coeffs(), model, w);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < model.whitened_corpus.cols(); ++c) {
    best = std::min(best, simd::squared_distance(
                              std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                              std::span<const double>(model.whitened_corpus.col(c).data(),
                                                      static_cast<std::size_t>(w.size()))));
  }
  return std::sqrt(best);
}

double conformance_score(const PathStream& x, const ConformanceModel& model) {
  check_path_dim(x, model.dim, "conformance_score");
  return conformance_score(signature(x, model.level).tensor(), model);
}

double variance_adjusted_conformance(const PathStream& x, std::span<const PathStream> corpus,
                                     const Eigen::MatrixXd& sigma) {
  if (corpus.empty()) throw DataError("conformance corpus is empty");
  const double op = spectral_norm_psd(sigma);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& y : corpus) best = std::min(best, sup_distance(x, y));
  return std::sqrt(op) * best;
}

// ---------------------------------------------------------------------------
// One-class SVM

namespace {

void check_psd_gram(const Eigen::MatrixXd& gram, double tol) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) {
    throw DataError("Gram matrix must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DataError("Gram matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -tol * scale) {
    throw DataError("Gram matrix is not positive semidefinite (min eigenvalue " +
                    std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

double upper_bound(double nu, std::size_t n) {
  if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("OCSVM nu must lie in (0, 1]");
  if (nu * static_cast<double>(n) < 1.0 - 1e-12) {
    throw ConfigError("OCSVM infeasible: nu * n = " + std::to_string(nu * static_cast<double>(n)) +
                      " < 1");
  }
  return 1.0 / (nu * static_cast<double>(n));
}

}  // namespace

double ocsvm_kkt_residual(const Eigen::MatrixXd& gram, std::span<const double> alphas, double nu) {
  const std::size_t n = alphas.size();
  const double ub = upper_bound(nu, n);
  Eigen::Map<const Eigen::VectorXd> a(alphas.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd g = gram * a;
  double gmax = -std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (alphas[i] > 0.0) gmax = std::max(gmax, g(k));
    if (alphas[i] < ub) gmin = std::min(gmin, g(k));
  }
  if (!std::isfinite(gmax) || !std::isfinite(gmin)) return 0.0;
  return std::max(0.0, gmax - gmin);
}

OcsvmSolution ocsvm_fit(const Eigen::MatrixXd& gram, double nu, const OcsvmOptions& opts) {
  const std::size_t n = static_cast<std::size_t>(gram.rows());
  const double ub = upper_bound(nu, n);
  check_psd_gram(gram, opts.psd_tolerance);

  std::vector<double> alpha(n, 0.0);
  {
    double remaining = 1.0;
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
      alpha[i] = std::min(ub, remaining);
      remaining -= alpha[i];
      if (remaining < 1e-15) remaining = 0.0;
    }
  }
  Eigen::Map<Eigen::VectorXd> a(alpha.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd g = gram * a;

  OcsvmSolution sol;
  constexpr double kTau = 1e-12;
  long it = 0;
  while (true) {
    // Working set: i decreases (largest gradient among alpha > 0), j increases.
    Eigen::Index i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
      if (alpha[static_cast<std::size_t>(k)] > 0.0 && g(k) > gmax) {
        gmax = g(k);
        i = k;
      }
      if (alpha[static_cast<std::size_t>(k)] < ub) gmin = std::min(gmin, g(k));
    }
    if (i < 0 || gmax - gmin <= opts.tolerance) {
      // Confirm against a freshly computed gradient to shed accumulated drift.
      g = gram * a;
      if (ocsvm_kkt_residual(gram, alpha, nu) <= opts.tolerance) {
        sol.converged = true;
        break;
      }
    }
    if (it >= opts.max_iterations) break;

    Eigen::Index j = -1;
    double best_gain = -1.0;
    const double kii = gram(i, i);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
      if (!(alpha[static_cast<std::size_t>(k)] < ub) || !(g(k) < gmax)) continue;
      const double diff = gmax - g(k);
      const double eta = std::max(kii + gram(k, k) - 2.0 * gram(i, k), kTau);
      const double gain = diff * diff / eta;
      if (gain > best_gain) {
        best_gain = gain;
        j = k;
      }
    }
    if (j < 0) break;

    const auto si = static_cast<std::size_t>(i);
    const auto sj = static_cast<std::size_t>(j);
    const double eta = std::max(kii + gram(j, j) - 2.0 * gram(i, j), kTau);
    double delta = (g(i) - g(j)) / eta;
    bool clip_i = false;
    bool clip_j = false;
    if (delta >= alpha[si]) {
      delta = alpha[si];
      clip_i = true;
    }
    if (delta >= ub - alpha[sj]) {
      delta = ub - alpha[sj];
      clip_j = true;
      clip_i = clip_i && delta == alpha[si];
    }
    alpha[si] = clip_i ? 0.0 : alpha[si] - delta;
    alpha[sj] = clip_j ? ub : alpha[sj] + delta;
    g.noalias() += delta * (gram.col(j) - gram.col(i));
    ++it;
  }

  g = gram * a;
  sol.iterations = it;
  sol.kkt_residual = ocsvm_kkt_residual(gram, alpha, nu);
  sol.objective = 0.5 * a.dot(g);

  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lo = -std::numeric_limits<double>::infinity();  // max g over alpha == ub
  double hi = std::numeric_limits<double>::infinity();   // min g over alpha == 0
  for (std::size_t k = 0; k < n; ++k) {
    const double gk = g(static_cast<Eigen::Index>(k));
    if (alpha[k] > 0.0 && alpha[k] < ub) {
      free_sum += gk;
      ++free_count;
    } else if (alpha[k] >= ub) {
      lo = std::max(lo, gk);
    } else {
      hi = std::min(hi, gk);
    }
  }
  if (free_count > 0) {
    sol.rho = free_sum / static_cast<double>(free_count);
    sol.rho_from_margin = true;
  } else if (std::isfinite(lo) && std::isfinite(hi)) {
    sol.rho = 0.5 * (lo + hi);
  } else {
    sol.rho = std::isfinite(lo) ? lo : hi;
  }
  sol.alphas = std::move(alpha);
  return sol;
}

Eigen::MatrixXd signature_gram(std::span<const TruncatedSignature> sigs) {
  const auto n = static_cast<Eigen::Index>(sigs.size());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = pairing(sigs[static_cast<std::size_t>(i)].tensor(),
                               sigs[static_cast<std::size_t>(j)].tensor());
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

OcsvmModel fit_ocsvm(std::span<const PathStream> paths, int level, double nu,
                     const OcsvmOptions& opts) {
  if (paths.empty()) throw DataError("cannot fit an OCSVM on an empty sample");
  const int dim = paths.front().dim();
  for (const auto& p : paths) check_path_dim(p, dim, "fit_ocsvm");
  upper_bound(nu, paths.size());
  const auto sigs = signatures(paths, level);
  const auto sol = ocsvm_fit(signature_gram(sigs), nu, opts);
  if (!sol.converged) {
    throw NumericalError("OCSVM solver did not converge (KKT residual " +
                         std::to_string(sol.kkt_residual) + ")");
  }

  OcsvmModel model;
  model.level = level;
  model.dim = dim;
  model.nu = nu;
  model.rho = sol.rho;
  model.primal = TruncatedTensor(dim, level);
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    if (sol.alphas[i] <= 0.0) continue;
    model.alphas.push_back(sol.alphas[i]);
    model.support.push_back(sigs[i].tensor());
    model.support_ids.push_back(paths[i].id());
    TruncatedTensor term = sigs[i].tensor();
    term *= sol.alphas[i];
    model.primal += term;
  }
  return model;
}

double ocsvm_score(const TruncatedSignature& sig, const OcsvmModel& model) {
  if (model.support.empty()) throw DataError("OCSVM model is not fitted");
  check_compatible(sig, model.dim, model.level, "ocsvm_score");
  double acc = 0.0;
  for (std::size_t i = 0; i < model.support.size(); ++i) {
    acc += model.alphas[i] * pairing(model.support[i], sig.tensor());
  }
  return acc - model.rho;
}

double ocsvm_score(const PathStream& x, const OcsvmModel& model) {
  if (model.support.empty()) throw DataError("OCSVM model is not fitted");
  check_path_dim(x, model.dim, "ocsvm_score");
  return ocsvm_score(signature(x, model.level), model);
}

double ocsvm_score_primal(const TruncatedSignature& sig, const OcsvmModel& model) {
  if (model.support.empty()) throw DataError("OCSVM model is not fitted");
  check_compatible(sig, model.dim, model.level, "ocsvm_score_primal");
  return pairing(model.primal, sig.tensor()) - model.rho;
}

// ---------------------------------------------------------------------------
// TAMSD

double tamsd(const PathStream& x, int lag) {
  if (lag < 1) throw ConfigError("TAMSD lag must be >= 1");
  if (static_cast<std::size_t>(lag) >= x.segments()) {
    throw DataError("TAMSD lag " + std::to_string(lag) + " >= path length " +
                    std::to_string(x.segments()));
  }
  const std::size_t count = x.nodes() - static_cast<std::size_t>(lag);
  double acc = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    acc += simd::squared_distance(x.point(j + static_cast<std::size_t>(lag)), x.point(j));
  }
  return acc / static_cast<double>(count);
}

}  // namespace sigtest
