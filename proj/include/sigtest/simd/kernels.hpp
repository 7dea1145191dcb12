#pragma once

// Dense double-precision kernels used by the tensor and statistics code.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2/FMA variant is compiled into a separate translation unit and chosen at
// runtime when the CPU supports it. Setting SIGTEST_ISA=scalar in the
// environment pins the scalar table.

#include <cstddef>
#include <span>
#include <string_view>

namespace sigtest::simd {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // y[i] *= a
  void (*scale)(double a, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();

const KernelTable& active_kernels();
Isa active_isa();
std::string_view isa_name(Isa isa);

// Overrides runtime selection (tests and benchmarks). Returns false if the
// requested ISA is unavailable, in which case the selection is unchanged.
bool force_isa(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active_kernels().dot(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(a, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  return active_kernels().squared_distance(x.data(), y.data(),
                                           x.size() < y.size() ? x.size() : y.size());
}

inline void scale(double a, std::span<double> y) { active_kernels().scale(a, y.data(), y.size()); }

}  // namespace sigtest::simd
