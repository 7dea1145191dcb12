#pragma once

// Truncated signatures of piecewise-linear paths.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sigtest/tensor_algebra.hpp"

namespace sigtest {

// Timestamped d-dimensional path, linearly interpolated between nodes.
// Invariants: at least two nodes, strictly increasing times, dim >= 1.
class PathStream {
 public:
  PathStream() = default;
  // points is row-major: node i occupies [i * dim, (i + 1) * dim).
  PathStream(std::vector<double> times, std::vector<double> points, int dim, std::string id = {});

  int dim() const noexcept { return dim_; }
  std::size_t nodes() const noexcept { return times_.size(); }
  std::size_t segments() const noexcept { return times_.size() - 1; }
  const std::string& id() const noexcept { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points_).subspan(i * static_cast<std::size_t>(dim_),
                                                    static_cast<std::size_t>(dim_));
  }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& points() const noexcept { return points_; }

  // Linear interpolation; constant extrapolation outside [t_0, t_L].
  std::vector<double> value_at(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> points_;
  int dim_ = 0;
  std::string id_;
};

// A truncated tensor with unit level-0 coefficient, tagged with its source path.
class TruncatedSignature {
 public:
  TruncatedSignature() = default;
  explicit TruncatedSignature(TruncatedTensor tensor, std::string path_id = {});

  const TruncatedTensor& tensor() const noexcept { return tensor_; }
  int dim() const noexcept { return tensor_.dim(); }
  int level() const noexcept { return tensor_.level(); }
  const std::string& path_id() const noexcept { return path_id_; }
  double operator[](const Word& w) const { return tensor_[w]; }

 private:
  TruncatedTensor tensor_;
  std::string path_id_;
};

// exp(increment) truncated at level: level k holds increment^{(x)k} / k!.
TruncatedTensor segment_exponential(std::span<const double> increment, int level);

// Truncated tensor product: out[w] = sum over splits w = u.v of a[u] * b[v].
TruncatedTensor tensor_product(const TruncatedTensor& a, const TruncatedTensor& b);

// Chen's relation; both operands must share dimension and level.
TruncatedSignature chen_concat(const TruncatedSignature& first, const TruncatedSignature& second);

TruncatedSignature signature(const PathStream& path, int level);
std::vector<TruncatedSignature> signatures(std::span<const PathStream> paths, int level);

// Prepends a channel holding (t - t_0) / (t_L - t_0).
PathStream time_augment(const PathStream& path);

// Appends a visibility channel equal to 1 on the original nodes, then two
// nodes one time unit apart: the first drops visibility to 0 at the final
// position, the second moves every channel to the origin.
PathStream invisibility_reset(const PathStream& path);

enum class PathTransform { kTimeAugment, kInvisibilityReset };

// Applies transforms left to right (the first listed runs first).
PathStream apply_transforms(const PathStream& path, std::span<const PathTransform> transforms);
PathTransform parse_transform(const std::string& name);
std::string transform_name(PathTransform t);

// sup_t |x(t)| + sup_{s != t} |x(t) - x(s)| / |t - s|^gamma after rescaling
// time to [0, 1], both suprema taken over node pairs. gamma in (0, 1).
double holder_norm(const PathStream& path, double gamma);

// sup_t |x(t) - y(t)| over the union of both node sets (exact for
// piecewise-linear paths on a common time span).
double sup_distance(const PathStream& x, const PathStream& y);

// <S_N(x), S_N(y)>.
double truncated_sig_kernel(const PathStream& x, const PathStream& y, int level);

// Path CSV (long format): header "path_id,t,x1,...,xd", rows grouped by path_id.
std::vector<PathStream> read_path_csv(std::istream& in);
std::vector<PathStream> read_path_csv_file(const std::string& path);
void write_path_csv(std::ostream& out, std::span<const PathStream> paths);
void write_path_csv_file(const std::string& path, std::span<const PathStream> paths);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace sigtest
