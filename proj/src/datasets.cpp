#include "sigtest/datasets.hpp"

#include <algorithm>
#include <cmath>

#include "sigtest/error.hpp"

namespace sigtest {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ index));
}

namespace {

std::vector<double> uniform_grid(int steps, double horizon) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = horizon * k / steps;
  return t;
}

// Symmetric square root-like factor A with A A^T = Sigma.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma) {
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ConfigError("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw ConfigError("covariance is not positive semidefinite");
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

void check_grid(int steps, double horizon) {
  if (steps < 1) throw ConfigError("number of steps L must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("horizon T must be > 0");
}

std::string make_id(const std::string& prefix, std::uint64_t index) {
  return prefix + "_" + std::to_string(index);
}

}  // namespace

std::vector<PathStream> simulate_bm(const BmConfig& cfg) {
  check_grid(cfg.steps, cfg.horizon);
  if (cfg.dim < 1) throw ConfigError("dimension must be >= 1");
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  Eigen::MatrixXd sigma = cfg.covariance.size() ? cfg.covariance : Eigen::MatrixXd::Identity(d, d);
  if (sigma.rows() != d || sigma.cols() != d) throw ConfigError("covariance must be d x d");
  const Eigen::MatrixXd a = psd_factor(sigma) * std::sqrt(cfg.horizon / cfg.steps);
  const auto times = uniform_grid(cfg.steps, cfg.horizon);

  std::vector<PathStream> out;
  out.reserve(cfg.n_paths);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(d), x = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    const std::uint64_t index = cfg.first_index + i;
    auto rng = path_rng(cfg.seed, index);
    std::vector<double> pts(times.size() * static_cast<std::size_t>(d), 0.0);
    x.setZero();
    for (int k = 1; k <= cfg.steps; ++k) {
      for (Eigen::Index c = 0; c < d; ++c) z(c) = normal(rng);
      x += a * z;
      std::copy(x.data(), x.data() + d, pts.begin() + static_cast<long>(k) * d);
    }
    out.emplace_back(times, std::move(pts), cfg.dim, make_id(cfg.id_prefix, index));
  }
  return out;
}

SpikeEnvelope parse_spike_envelope(const std::string& name) {
  if (name == "scaled") return SpikeEnvelope::kScaledCap;
  if (name == "capped") return SpikeEnvelope::kCappedTotal;
  throw ConfigError("unknown spike envelope '" + name + "' (expected scaled | capped)");
}

std::string spike_envelope_name(SpikeEnvelope e) {
  return e == SpikeEnvelope::kScaledCap ? "scaled" : "capped";
}

double spike_envelope(double t, double theta, double epsilon, SpikeEnvelope mode) {
  const double root = std::sqrt(std::max(t - theta, 0.0));
  return mode == SpikeEnvelope::kScaledCap ? epsilon * std::min(root, 1.0)
                                           : std::min(epsilon * root, 1.0);
}

std::vector<PathStream> simulate_spiked_bm(const SpikeConfig& cfg, std::size_t n_paths,
                                           std::uint64_t seed, std::uint64_t first_index,
                                           const std::string& id_prefix) {
  check_grid(cfg.steps, cfg.horizon);
  if (!(cfg.epsilon >= 0.0)) throw ConfigError("spike magnitude epsilon must be >= 0");
  const auto times = uniform_grid(cfg.steps, cfg.horizon);
  const double sd = std::sqrt(cfg.horizon / cfg.steps);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<PathStream> out;
  out.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const std::uint64_t index = first_index + i;
    auto rng = path_rng(seed, index);
    std::vector<double> pts(times.size(), 0.0);
    double x = 0.0;
    for (int k = 1; k <= cfg.steps; ++k) {
      const double z = normal(rng);
      x += cfg.zero_noise ? 0.0 : sd * z;
      pts[static_cast<std::size_t>(k)] = x;
    }
    const double theta_draw = uniform(rng);
    const double theta = cfg.fixed_theta.value_or(theta_draw);
    if (cfg.epsilon > 0.0) {
      for (std::size_t k = 0; k < times.size(); ++k) {
        pts[k] += spike_envelope(times[k], theta, cfg.epsilon, cfg.envelope);
      }
    }
    out.emplace_back(times, std::move(pts), 1, make_id(id_prefix, index));
  }
  return out;
}

Eigen::MatrixXd fbm_covariance(double hurst, int steps, double horizon) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ConfigError("Hurst index must lie in (0, 1)");
  check_grid(steps, horizon);
  const double h2 = 2.0 * hurst;
  Eigen::MatrixXd c(steps, steps);
  for (int i = 0; i < steps; ++i) {
    const double t = horizon * (i + 1) / steps;
    for (int j = 0; j <= i; ++j) {
      const double s = horizon * (j + 1) / steps;
      const double v = 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

std::vector<PathStream> simulate_fbm(double hurst, std::size_t n_paths, int steps, double horizon,
                                     std::uint64_t seed, std::uint64_t first_index,
                                     const std::string& id_prefix) {
  const Eigen::MatrixXd cov = fbm_covariance(hurst, steps, horizon);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("fBM covariance Cholesky failed");
  const Eigen::MatrixXd lower = llt.matrixL();
  const auto times = uniform_grid(steps, horizon);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<PathStream> out;
  out.reserve(n_paths);
  Eigen::VectorXd z(steps);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const std::uint64_t index = first_index + i;
    auto rng = path_rng(seed, index);
    for (int k = 0; k < steps; ++k) z(k) = normal(rng);
    const Eigen::VectorXd x = lower.triangularView<Eigen::Lower>() * z;
    std::vector<double> pts(times.size(), 0.0);
    std::copy(x.data(), x.data() + steps, pts.begin() + 1);
    out.emplace_back(times, std::move(pts), 1, make_id(id_prefix, index));
  }
  return out;
}

PathStream donsker_embed(const std::vector<std::vector<double>>& stream, std::size_t pad_to,
                         const std::string& id) {
  if (stream.empty()) throw DataError("cannot embed an empty stream");
  if (pad_to < stream.size()) throw ConfigError("pad length is shorter than the stream");
  const std::size_t d = stream.front().size();
  if (d == 0) throw DataError("stream observations must be non-empty vectors");
  for (const auto& obs : stream) {
    if (obs.size() != d) throw DataError("stream observations differ in dimension");
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(pad_to));
  std::vector<double> times(pad_to + 1);
  std::vector<double> pts((pad_to + 1) * d, 0.0);
  std::vector<double> acc(d, 0.0);
  for (std::size_t k = 1; k <= pad_to; ++k) {
    const auto& obs = stream[std::min(k, stream.size()) - 1];
    for (std::size_t c = 0; c < d; ++c) {
      acc[c] += obs[c];
      pts[k * d + c] = acc[c] * inv_sqrt;
    }
    times[k] = static_cast<double>(k) / static_cast<double>(pad_to);
  }
  return PathStream(std::move(times), std::move(pts), static_cast<int>(d), id);
}

std::vector<double> default_spike_grid() { return {0.0, 1.0, 2.0, std::sqrt(8.0), 4.0, 6.0}; }

}  // namespace sigtest
