#include "sigtest/signature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigtest/error.hpp"
#include "sigtest/simd/kernels.hpp"

namespace sigtest {

PathStream::PathStream(std::vector<double> times, std::vector<double> points, int dim,
                       std::string id)
    : times_(std::move(times)), points_(std::move(points)), dim_(dim), id_(std::move(id)) {
  if (dim_ < 1) throw DataError("path dimension must be >= 1");
  if (times_.size() < 2) throw DataError("path '" + id_ + "' needs at least two nodes");
  if (points_.size() != times_.size() * static_cast<std::size_t>(dim_)) {
    throw DataError("path '" + id_ + "' has " + std::to_string(points_.size()) +
                    " values for " + std::to_string(times_.size()) + " nodes of dimension " +
                    std::to_string(dim_));
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw DataError("path '" + id_ + "' times are not strictly increasing at node " +
                      std::to_string(i));
    }
  }
  for (double v : points_) {
    if (!std::isfinite(v)) throw DataError("path '" + id_ + "' contains a non-finite value");
  }
}

std::vector<double> PathStream::value_at(double t) const {
  const auto d = static_cast<std::size_t>(dim_);
  if (t <= times_.front()) return {points_.begin(), points_.begin() + static_cast<long>(d)};
  if (t >= times_.back()) return {points_.end() - static_cast<long>(d), points_.end()};
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  const std::size_t lo = hi - 1;
  const double frac = (t - times_[lo]) / (times_[hi] - times_[lo]);
  std::vector<double> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = points_[lo * d + k] + frac * (points_[hi * d + k] - points_[lo * d + k]);
  }
  return out;
}

TruncatedSignature::TruncatedSignature(TruncatedTensor tensor, std::string path_id)
    : tensor_(std::move(tensor)), path_id_(std::move(path_id)) {
  if (tensor_.coeffs()[0] != 1.0) {
    throw NumericalError("signature level-0 coefficient must be exactly 1");
  }
}

TruncatedTensor segment_exponential(std::span<const double> increment, int level) {
  const int dim = static_cast<int>(increment.size());
  TruncatedTensor out(dim, level);
  out.coeffs()[0] = 1.0;
  for (int k = 1; k <= level; ++k) {
    const auto prev = out.level_coeffs(k - 1);
    auto cur = out.level_coeffs(k);
    const double inv_k = 1.0 / static_cast<double>(k);
    // cur[p * d + j] = prev[p] * increment[j] / k
    for (std::size_t p = 0; p < prev.size(); ++p) {
      simd::axpy(prev[p] * inv_k, increment, cur.subspan(p * increment.size(), increment.size()));
    }
  }
  return out;
}

TruncatedTensor tensor_product(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (a.dim() != b.dim()) throw ConfigError("tensor product dimension mismatch");
  const int level = std::min(a.level(), b.level());
  TruncatedTensor out(a.dim(), level);
  for (int m = 0; m <= level; ++m) {
    auto dst = out.level_coeffs(m);
    for (int i = 0; i <= m; ++i) {
      const auto left = a.level_coeffs(i);
      const auto right = b.level_coeffs(m - i);
      // Block p of dst (length d^{m-i}) gains left[p] * right.
      for (std::size_t p = 0; p < left.size(); ++p) {
        if (left[p] == 0.0) continue;
        simd::axpy(left[p], right, dst.subspan(p * right.size(), right.size()));
      }
    }
  }
  return out;
}

TruncatedSignature chen_concat(const TruncatedSignature& first, const TruncatedSignature& second) {
  if (first.dim() != second.dim() || first.level() != second.level()) {
    throw ConfigError("chen_concat needs signatures of equal dimension and level");
  }
  TruncatedTensor prod = tensor_product(first.tensor(), second.tensor());
  prod.coeffs()[0] = 1.0;
  return TruncatedSignature(std::move(prod), first.path_id());
}

TruncatedSignature signature(const PathStream& path, int level) {
  if (level < 1) throw ConfigError("signature level must be >= 1");
  if (path.nodes() < 2) throw DataError("signature of an empty path");
  const auto d = static_cast<std::size_t>(path.dim());
  std::vector<double> inc(d);
  TruncatedTensor acc = TruncatedTensor::unit(path.dim(), level);
  for (std::size_t s = 0; s < path.segments(); ++s) {
    const auto a = path.point(s);
    const auto b = path.point(s + 1);
    for (std::size_t k = 0; k < d; ++k) inc[k] = b[k] - a[k];
    acc = tensor_product(acc, segment_exponential(inc, level));
  }
  acc.coeffs()[0] = 1.0;
  return TruncatedSignature(std::move(acc), path.id());
}

std::vector<TruncatedSignature> signatures(std::span<const PathStream> paths, int level) {
  std::vector<TruncatedSignature> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(signature(p, level));
  return out;
}

PathStream time_augment(const PathStream& path) {
  const auto d = static_cast<std::size_t>(path.dim());
  const double t0 = path.times().front();
  const double span = path.times().back() - t0;
  std::vector<double> pts;
  pts.reserve(path.nodes() * (d + 1));
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    pts.push_back(i + 1 == path.nodes() ? 1.0 : (path.time(i) - t0) / span);
    const auto p = path.point(i);
    pts.insert(pts.end(), p.begin(), p.end());
  }
  return PathStream(path.times(), std::move(pts), path.dim() + 1, path.id());
}

PathStream invisibility_reset(const PathStream& path) {
  const auto d = static_cast<std::size_t>(path.dim());
  std::vector<double> times = path.times();
  std::vector<double> pts;
  pts.reserve((path.nodes() + 2) * (d + 1));
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    const auto p = path.point(i);
    pts.insert(pts.end(), p.begin(), p.end());
    pts.push_back(1.0);
  }
  const auto last = path.point(path.nodes() - 1);
  pts.insert(pts.end(), last.begin(), last.end());
  pts.push_back(0.0);
  pts.insert(pts.end(), d + 1, 0.0);
  const double t_end = times.back();
  times.push_back(t_end + 1.0);
  times.push_back(t_end + 2.0);
  return PathStream(std::move(times), std::move(pts), path.dim() + 1, path.id());
}

PathStream apply_transforms(const PathStream& path, std::span<const PathTransform> transforms) {
  PathStream out = path;
  for (const auto t : transforms) {
    out = t == PathTransform::kTimeAugment ? time_augment(out) : invisibility_reset(out);
  }
  return out;
}

PathTransform parse_transform(const std::string& name) {
  if (name == "time" || name == "time_augment") return PathTransform::kTimeAugment;
  if (name == "invisibility" || name == "invisibility_reset" || name == "ir") {
    return PathTransform::kInvisibilityReset;
  }
  throw ConfigError("unknown path transform '" + name + "' (expected time | invisibility)");
}

std::string transform_name(PathTransform t) {
  return t == PathTransform::kTimeAugment ? "time" : "invisibility";
}

double holder_norm(const PathStream& path, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("Hoelder exponent must lie in (0, 1)");
  const std::size_t n = path.nodes();
  const double t0 = path.times().front();
  const double span = path.times().back() - t0;
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = (path.time(i) - t0) / span;

  double sup_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = path.point(i);
    double sq = 0.0;
    for (double v : p) sq += v * v;
    sup_abs = std::max(sup_abs, std::sqrt(sq));
  }
  double sup_ratio = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = path.point(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = std::sqrt(simd::squared_distance(pi, path.point(j)));
      sup_ratio = std::max(sup_ratio, dist / std::pow(s[j] - s[i], gamma));
    }
  }
  return sup_abs + sup_ratio;
}

double sup_distance(const PathStream& x, const PathStream& y) {
  if (x.dim() != y.dim()) throw DataError("sup_distance dimension mismatch");
  std::vector<double> grid = x.times();
  grid.insert(grid.end(), y.times().begin(), y.times().end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double best = 0.0;
  for (double t : grid) {
    const auto a = x.value_at(t);
    const auto b = y.value_at(t);
    best = std::max(best, simd::squared_distance(a, b));
  }
  return std::sqrt(best);
}

double truncated_sig_kernel(const PathStream& x, const PathStream& y, int level) {
  if (x.dim() != y.dim()) throw DataError("kernel dimension mismatch");
  return pairing(signature(x, level).tensor(), signature(y, level).tensor());
}

}  // namespace sigtest
