#pragma once

// Signature test statistics: distance to the expected signature, variance-norm
// conformance, one-class SVM, and the TAMSD baseline.

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sigtest/signature.hpp"
#include "sigtest/tensor_algebra.hpp"

namespace sigtest {

// ---------------------------------------------------------------------------
// Distance to the expected signature

struct ExpectedSignatureModel {
  TruncatedTensor mean;
  int level = 0;
  int dim = 0;
  std::size_t sample_count = 0;
  double mean_sq_norm = 0.0;
  // Optional: corpus paths kept for the kernel-trick evaluation route, with
  // the precomputed average of kappa_N over all corpus pairs.
  std::vector<PathStream> corpus;
  double mean_pair_kernel = 0.0;

  bool has_corpus() const noexcept { return !corpus.empty(); }
};

ExpectedSignatureModel fit_expected_signature(std::span<const PathStream> paths, int level,
                                              bool retain_corpus = false);

// ||S_N(x) - mean||_2
double distance_to_mean(const PathStream& x, const ExpectedSignatureModel& model);
double distance_to_mean(const TruncatedSignature& sig, const ExpectedSignatureModel& model);

// sqrt(k(x,x) - 2 avg_i k(X_i,x) + avg_ij k(X_i,X_j)) evaluated with explicit
// kernel calls over the retained corpus. Throws DataError without a corpus.
double distance_to_mean_kernel(const PathStream& x, const ExpectedSignatureModel& model);

// ---------------------------------------------------------------------------
// Conformance

struct ConformanceModel {
  int level = 0;
  int dim = 0;
  std::vector<TruncatedTensor> corpus;
  Eigen::MatrixXd covariance;
  double ridge = 0.0;
  // Spectral factorization of the covariance (ascending eigenvalues).
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  // Corpus signatures projected on the eigenbasis and scaled by (lambda + ridge)^{-1/2}.
  Eigen::MatrixXd whitened_corpus;

  std::size_t coordinates() const { return static_cast<std::size_t>(covariance.rows()); }
};

// Default ridge 1e-8 * trace / dim, applied when ridge < 0.
ConformanceModel fit_conformance(std::span<const PathStream> corpus, int level, double ridge = -1.0);

// Builds the model from explicit corpus tensors and covariance. Throws
// DataError when the covariance is not symmetric PSD within 1e-10.
ConformanceModel make_conformance_model(std::vector<TruncatedTensor> corpus,
                                        Eigen::MatrixXd covariance, double ridge);

// sqrt(v^T (Sigma + ridge I)^+ v). With ridge == 0 a vector outside the range
// of Sigma has infinite norm.
double variance_norm(std::span<const double> v, const ConformanceModel& model);
double variance_norm(const TruncatedTensor& v, const ConformanceModel& model);

// min over corpus signatures y of variance_norm(S_N(x) - y).
double conformance_score(const PathStream& x, const ConformanceModel& model);
double conformance_score(const TruncatedTensor& sig, const ConformanceModel& model);

// ||Sigma||_op^{1/2} * min over corpus of sup_t |x(t) - y(t)|.
double variance_adjusted_conformance(const PathStream& x, std::span<const PathStream> corpus,
                                     const Eigen::MatrixXd& sigma);

// Largest eigenvalue of a symmetric PSD matrix; DataError if not PSD.
double spectral_norm_psd(const Eigen::MatrixXd& sigma);

// ---------------------------------------------------------------------------
// One-class SVM

struct OcsvmOptions {
  double tolerance = 1e-7;
  long max_iterations = 100000;
  // Smallest eigenvalue allowed, relative to max(1, max diagonal).
  double psd_tolerance = 1e-8;
};

struct OcsvmSolution {
  std::vector<double> alphas;
  double rho = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;
  bool converged = false;
  bool rho_from_margin = false;
};

// Solves min 1/2 a^T K a subject to 0 <= a_i <= 1/(nu n), sum a = 1 by
// pairwise (SMO) descent with second-order working-set selection.
OcsvmSolution ocsvm_fit(const Eigen::MatrixXd& gram, double nu, const OcsvmOptions& opts = {});

// max over free variables of g_i minus min over non-saturated of g_j, floored at 0.
double ocsvm_kkt_residual(const Eigen::MatrixXd& gram, std::span<const double> alphas, double nu);

struct OcsvmModel {
  int level = 0;
  int dim = 0;
  double nu = 0.0;
  double rho = 0.0;
  std::vector<double> alphas;                // support weights (alpha > 0)
  std::vector<TruncatedTensor> support;      // support signatures
  std::vector<std::string> support_ids;      // source path ids
  TruncatedTensor primal;                    // sum_i alpha_i S_N(x_i)
};

Eigen::MatrixXd signature_gram(std::span<const TruncatedSignature> sigs);

OcsvmModel fit_ocsvm(std::span<const PathStream> paths, int level, double nu,
                     const OcsvmOptions& opts = {});

// sum_i alpha_i k_N(x_i, x) - rho over the support set. Negative => novelty.
double ocsvm_score(const PathStream& x, const OcsvmModel& model);
double ocsvm_score(const TruncatedSignature& sig, const OcsvmModel& model);
// Same value through the precomputed primal tensor.
double ocsvm_score_primal(const TruncatedSignature& sig, const OcsvmModel& model);

// ---------------------------------------------------------------------------
// TAMSD

// Mean of |X(j+tau) - X(j)|^2 over the L+1 path nodes. Requires 1 <= tau < L.
double tamsd(const PathStream& x, int lag);

}  // namespace sigtest
