#pragma once

// Truncated tensor algebra over the alphabet {1, ..., d}.
//
// Words are ordered length-first, then lexicographically. A dense tensor of
// level N stores one coefficient per word of length <= N at the word's rank in
// that order, so the level-k block starts at offset (d^k - 1) / (d - 1) (or k
// when d == 1). Sparse tensors key their coefficients by the same rank, which
// makes the two representations directly comparable.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace sigtest {

using Letter = std::uint16_t;

// A multi-index (i_1, ..., i_k) with letters in [1, d]. The empty word is valid.
class Word {
 public:
  Word() = default;
  Word(std::initializer_list<Letter> letters) : letters_(letters) {}
  explicit Word(std::vector<Letter> letters) : letters_(std::move(letters)) {}

  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  const std::vector<Letter>& letters() const noexcept { return letters_; }

  // Concatenation u . v
  Word operator+(const Word& other) const;

  // Length-then-lexicographic order.
  friend bool operator<(const Word& a, const Word& b);
  friend bool operator==(const Word& a, const Word& b) = default;

 private:
  std::vector<Letter> letters_;
};

// Number of words of length exactly k.
std::uint64_t level_size(int dim, int k);
// Number of words of length <= level, i.e. sum_{k=0}^{level} d^k.
std::uint64_t tensor_size(int dim, int level);
// Rank of the first word of length k.
std::uint64_t level_offset(int dim, int k);
// Rank of a word in length-then-lexicographic order. Letters must be in [1, dim].
std::uint64_t word_index(const Word& word, int dim);
Word word_at(std::uint64_t index, int dim);
// Length of the word with the given rank.
int word_length(std::uint64_t index, int dim);

// Default cap on the level of shuffle-product outputs. 12 for d <= 4; for
// larger alphabets the cap keeps d^cap at or below 4^12.
int default_level_cap(int dim);

// Dense element of T^N(R^d) (or of its dual; the canonical basis identifies them).
class TruncatedTensor {
 public:
  TruncatedTensor() = default;
  // Zero tensor.
  TruncatedTensor(int dim, int level);
  TruncatedTensor(int dim, int level, std::vector<double> coeffs);

  // The empty-word functional 1.
  static TruncatedTensor unit(int dim, int level);
  // The functional e_{word} with unit coefficient.
  static TruncatedTensor basis(int dim, int level, const Word& word, double value = 1.0);

  int dim() const noexcept { return dim_; }
  int level() const noexcept { return level_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<double> coeffs() noexcept { return coeffs_; }
  std::span<const double> level_coeffs(int k) const;
  std::span<double> level_coeffs(int k);

  double operator[](const Word& word) const;
  double& at(const Word& word);
  double at_index(std::uint64_t index) const { return coeffs_[index]; }

  // Projection onto words of length <= level (zero-padded when level grows).
  TruncatedTensor with_level(int level) const;

  TruncatedTensor& operator+=(const TruncatedTensor& other);
  TruncatedTensor& operator-=(const TruncatedTensor& other);
  TruncatedTensor& operator*=(double factor);
  friend TruncatedTensor operator+(TruncatedTensor a, const TruncatedTensor& b) { return a += b; }
  friend TruncatedTensor operator-(TruncatedTensor a, const TruncatedTensor& b) { return a -= b; }
  friend TruncatedTensor operator*(double f, TruncatedTensor a) { return a *= f; }

 private:
  int dim_ = 0;
  int level_ = 0;
  std::vector<double> coeffs_;
};

// Sparse functional; coefficients keyed by word rank. Zero entries may be absent.
class SparseTensor {
 public:
  using Terms = std::map<std::uint64_t, double>;

  SparseTensor() = default;
  SparseTensor(int dim, int level) : dim_(dim), level_(level) {}
  static SparseTensor from_dense(const TruncatedTensor& dense);
  static SparseTensor unit(int dim, int level);

  int dim() const noexcept { return dim_; }
  int level() const noexcept { return level_; }
  const Terms& terms() const noexcept { return terms_; }
  std::size_t nonzeros() const noexcept { return terms_.size(); }

  double operator[](const Word& word) const;
  void add(std::uint64_t index, double value);
  void add(const Word& word, double value) { add(word_index(word, dim_), value); }

  TruncatedTensor to_dense() const;
  TruncatedTensor to_dense(int level) const;

  SparseTensor& operator+=(const SparseTensor& other);
  SparseTensor& operator*=(double factor);

 private:
  int dim_ = 0;
  int level_ = 0;
  Terms terms_;
};

// Degree-n polynomial with coefficients a_0..a_n (ascending powers).
struct PolynomialCoefficients {
  std::vector<double> a;

  int degree() const noexcept { return static_cast<int>(a.size()) - 1; }
  double operator()(double x) const;
  PolynomialCoefficients derivative() const;
};

// All interleavings of u and v with their integer multiplicities, in canonical
// word order. Multiplicities sum to binomial(|u|+|v|, |u|).
std::vector<std::pair<Word, std::uint64_t>> shuffle_words(const Word& u, const Word& v);

// Shuffle product truncated at out_level. Throws ConfigError on alphabet mismatch.
TruncatedTensor shuffle(const TruncatedTensor& a, const TruncatedTensor& b, int out_level);
SparseTensor shuffle(const SparseTensor& a, const SparseTensor& b, int out_level);

// k-fold shuffle power; k == 0 yields the unit functional.
SparseTensor shuffle_power(const SparseTensor& w, int k, int out_level);
TruncatedTensor shuffle_power(const TruncatedTensor& w, int k, int out_level);

// sum_i a_i * l^{shuffle i} at level degree * l.level(). Throws
// TensorCapExceeded if that level exceeds level_cap (0 selects the default).
SparseTensor polynomial_shuffle(const PolynomialCoefficients& poly, const SparseTensor& ell,
                                int level_cap = 0);

// Sum over shared words of a[word] * b[word]; pairs up to the smaller level.
double pairing(const TruncatedTensor& a, const TruncatedTensor& b);
double pairing(const SparseTensor& a, const TruncatedTensor& b);
double pairing(const SparseTensor& a, const SparseTensor& b);

double l2_norm(const TruncatedTensor& t);
double l2_norm(const SparseTensor& t);

// JSON: {"d": d, "N": N, "coeffs": [[[letters...], value], ...]} in canonical word order.
void to_json(nlohmann::json& j, const TruncatedTensor& t);
void from_json(const nlohmann::json& j, TruncatedTensor& t);
void to_json(nlohmann::json& j, const SparseTensor& t);
void from_json(const nlohmann::json& j, SparseTensor& t);

}  // namespace sigtest
