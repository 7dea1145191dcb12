#pragma once

// Synthetic path generators and the Donsker stream embedding.
//
// Every path draws from its own generator seeded with splitmix64(seed ^ index),
// so any subset of paths can be regenerated independently.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigtest/signature.hpp"

namespace sigtest {

std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index);

struct BmConfig {
  std::size_t n_paths = 100;
  int steps = 200;  // L
  int dim = 1;
  Eigen::MatrixXd covariance;  // empty selects the identity
  double horizon = 2.0;        // T
  std::uint64_t seed = 0;
  std::uint64_t first_index = 0;  // substream offset, keeps ids unique across batches
  std::string id_prefix = "bm";
};

// Piecewise-linear paths on the uniform grid kT/L started at the origin, with
// Gaussian increments of covariance Sigma T / L.
std::vector<PathStream> simulate_bm(const BmConfig& cfg);

// How the spike envelope combines the magnitude with the unit cap.
//   kScaledCap:  eps * min(sqrt((t - theta)^+), 1)   (endpoint shift equals eps)
//   kCappedTotal: min(eps * sqrt((t - theta)^+), 1)
enum class SpikeEnvelope { kScaledCap, kCappedTotal };
SpikeEnvelope parse_spike_envelope(const std::string& name);
std::string spike_envelope_name(SpikeEnvelope e);

double spike_envelope(double t, double theta, double epsilon, SpikeEnvelope mode);

struct SpikeConfig {
  double epsilon = 0.0;
  double horizon = 2.0;
  int steps = 200;
  SpikeEnvelope envelope = SpikeEnvelope::kScaledCap;
  bool zero_noise = false;             // debug mode: drop the Brownian part
  std::optional<double> fixed_theta;   // debug mode: force the spike time
};

// d = 1 Brownian motion plus the spike envelope, theta ~ U[0, 1] per path.
// theta is drawn after the increments, so epsilon = 0 reproduces simulate_bm
// with the same seed and indices exactly.
std::vector<PathStream> simulate_spiked_bm(const SpikeConfig& cfg, std::size_t n_paths,
                                           std::uint64_t seed, std::uint64_t first_index = 0,
                                           const std::string& id_prefix = "spike");

// 1/2 (t^{2H} + s^{2H} - |t - s|^{2H}) on the grid kT/L, k = 1..L.
Eigen::MatrixXd fbm_covariance(double hurst, int steps, double horizon);

// Exact fBM samples via a dense Cholesky factor of fbm_covariance.
std::vector<PathStream> simulate_fbm(double hurst, std::size_t n_paths, int steps, double horizon,
                                     std::uint64_t seed, std::uint64_t first_index = 0,
                                     const std::string& id_prefix = "fbm");

// Pads the stream to pad_to observations with its last value, then returns
// the partial sums divided by sqrt(pad_to) at times k / pad_to.
PathStream donsker_embed(const std::vector<std::vector<double>>& stream, std::size_t pad_to,
                         const std::string& id = {});

// Standard grid points of the spike sweep.
std::vector<double> default_spike_grid();

}  // namespace sigtest
