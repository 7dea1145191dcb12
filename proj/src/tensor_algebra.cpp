#include "sigtest/tensor_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigtest/error.hpp"
#include "sigtest/simd/kernels.hpp"

namespace sigtest {

Word Word::operator+(const Word& other) const {
  std::vector<Letter> out = letters_;
  out.insert(out.end(), other.letters_.begin(), other.letters_.end());
  return Word(std::move(out));
}

bool operator<(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.letters_ < b.letters_;
}

namespace {

constexpr std::uint64_t kIndexLimit = std::uint64_t{1} << 62;

void check_dim(int dim) {
  if (dim < 1) throw ConfigError("alphabet size must be >= 1, got " + std::to_string(dim));
}

void check_same_alphabet(int a, int b) {
  if (a != b) {
    throw ConfigError("alphabet mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

std::uint64_t level_size(int dim, int k) {
  check_dim(dim);
  std::uint64_t out = 1;
  for (int i = 0; i < k; ++i) {
    if (out > kIndexLimit / static_cast<std::uint64_t>(dim)) {
      throw NumericalError("tensor level " + std::to_string(k) + " too large for alphabet " +
                           std::to_string(dim));
    }
    out *= static_cast<std::uint64_t>(dim);
  }
  return out;
}

std::uint64_t level_offset(int dim, int k) {
  check_dim(dim);
  if (dim == 1) return static_cast<std::uint64_t>(k);
  return (level_size(dim, k) - 1) / static_cast<std::uint64_t>(dim - 1);
}

std::uint64_t tensor_size(int dim, int level) { return level_offset(dim, level + 1); }

std::uint64_t word_index(const Word& word, int dim) {
  const int k = static_cast<int>(word.size());
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < word.size(); ++i) {
    const Letter l = word[i];
    if (l < 1 || l > dim) {
      throw ConfigError("letter " + std::to_string(l) + " outside alphabet [1, " +
                        std::to_string(dim) + "]");
    }
    rank = rank * static_cast<std::uint64_t>(dim) + (l - 1);
  }
  return level_offset(dim, k) + rank;
}

int word_length(std::uint64_t index, int dim) {
  int k = 0;
  while (level_offset(dim, k + 1) <= index) ++k;
  return k;
}

Word word_at(std::uint64_t index, int dim) {
  const int k = word_length(index, dim);
  std::uint64_t rank = index - level_offset(dim, k);
  std::vector<Letter> letters(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    letters[static_cast<std::size_t>(i)] = static_cast<Letter>(rank % static_cast<std::uint64_t>(dim) + 1);
    rank /= static_cast<std::uint64_t>(dim);
  }
  return Word(std::move(letters));
}

int default_level_cap(int dim) {
  check_dim(dim);
  if (dim <= 4) return 12;
  const double budget = 12.0 * std::log(4.0);
  return std::max(1, static_cast<int>(std::floor(budget / std::log(static_cast<double>(dim)))));
}

// ---------------------------------------------------------------------------
// TruncatedTensor

TruncatedTensor::TruncatedTensor(int dim, int level) : dim_(dim), level_(level) {
  check_dim(dim);
  if (level < 0) throw ConfigError("tensor level must be >= 0");
  coeffs_.assign(tensor_size(dim, level), 0.0);
}

TruncatedTensor::TruncatedTensor(int dim, int level, std::vector<double> coeffs)
    : dim_(dim), level_(level), coeffs_(std::move(coeffs)) {
  check_dim(dim);
  if (level < 0) throw ConfigError("tensor level must be >= 0");
  if (coeffs_.size() != tensor_size(dim, level)) {
    throw DataError("dense tensor needs " + std::to_string(tensor_size(dim, level)) +
                    " coefficients, got " + std::to_string(coeffs_.size()));
  }
}

TruncatedTensor TruncatedTensor::unit(int dim, int level) {
  TruncatedTensor t(dim, level);
  t.coeffs_[0] = 1.0;
  return t;
}

TruncatedTensor TruncatedTensor::basis(int dim, int level, const Word& word, double value) {
  TruncatedTensor t(dim, level);
  t.at(word) = value;
  return t;
}

std::span<const double> TruncatedTensor::level_coeffs(int k) const {
  const auto begin = level_offset(dim_, k);
  return std::span<const double>(coeffs_).subspan(begin, level_size(dim_, k));
}

std::span<double> TruncatedTensor::level_coeffs(int k) {
  const auto begin = level_offset(dim_, k);
  return std::span<double>(coeffs_).subspan(begin, level_size(dim_, k));
}

double TruncatedTensor::operator[](const Word& word) const {
  if (static_cast<int>(word.size()) > level_) return 0.0;
  return coeffs_[word_index(word, dim_)];
}

double& TruncatedTensor::at(const Word& word) {
  if (static_cast<int>(word.size()) > level_) {
    throw ConfigError("word of length " + std::to_string(word.size()) +
                      " beyond tensor level " + std::to_string(level_));
  }
  return coeffs_[word_index(word, dim_)];
}

TruncatedTensor TruncatedTensor::with_level(int level) const {
  TruncatedTensor out(dim_, level);
  const std::size_t n = std::min(out.coeffs_.size(), coeffs_.size());
  std::copy_n(coeffs_.begin(), n, out.coeffs_.begin());
  return out;
}

TruncatedTensor& TruncatedTensor::operator+=(const TruncatedTensor& other) {
  check_same_alphabet(dim_, other.dim_);
  if (other.level_ > level_) *this = with_level(other.level_);
  simd::axpy(1.0, other.coeffs_, coeffs_);
  return *this;
}

TruncatedTensor& TruncatedTensor::operator-=(const TruncatedTensor& other) {
  check_same_alphabet(dim_, other.dim_);
  if (other.level_ > level_) *this = with_level(other.level_);
  simd::axpy(-1.0, other.coeffs_, coeffs_);
  return *this;
}

TruncatedTensor& TruncatedTensor::operator*=(double factor) {
  simd::scale(factor, coeffs_);
  return *this;
}

// ---------------------------------------------------------------------------
// SparseTensor

SparseTensor SparseTensor::from_dense(const TruncatedTensor& dense) {
  SparseTensor out(dense.dim(), dense.level());
  const auto c = dense.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0) out.terms_.emplace(i, c[i]);
  }
  return out;
}

SparseTensor SparseTensor::unit(int dim, int level) {
  SparseTensor out(dim, level);
  out.terms_.emplace(0, 1.0);
  return out;
}

double SparseTensor::operator[](const Word& word) const {
  if (static_cast<int>(word.size()) > level_) return 0.0;
  const auto it = terms_.find(word_index(word, dim_));
  return it == terms_.end() ? 0.0 : it->second;
}

void SparseTensor::add(std::uint64_t index, double value) {
  if (index >= tensor_size(dim_, level_)) {
    throw ConfigError("word rank " + std::to_string(index) + " beyond sparse tensor level");
  }
  terms_[index] += value;
}

TruncatedTensor SparseTensor::to_dense() const { return to_dense(level_); }

TruncatedTensor SparseTensor::to_dense(int level) const {
  TruncatedTensor out(dim_, level);
  auto c = out.coeffs();
  for (const auto& [idx, v] : terms_) {
    if (idx < c.size()) c[idx] += v;
  }
  return out;
}

SparseTensor& SparseTensor::operator+=(const SparseTensor& other) {
  check_same_alphabet(dim_, other.dim_);
  level_ = std::max(level_, other.level_);
  for (const auto& [idx, v] : other.terms_) terms_[idx] += v;
  return *this;
}

SparseTensor& SparseTensor::operator*=(double factor) {
  for (auto& [idx, v] : terms_) v *= factor;
  return *this;
}

// ---------------------------------------------------------------------------
// Polynomials

double PolynomialCoefficients::operator()(double x) const {
  double acc = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * x + *it;
  return acc;
}

PolynomialCoefficients PolynomialCoefficients::derivative() const {
  PolynomialCoefficients out;
  if (a.size() <= 1) {
    out.a = {0.0};
    return out;
  }
  out.a.resize(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) out.a[i - 1] = static_cast<double>(i) * a[i];
  return out;
}

// ---------------------------------------------------------------------------
// Shuffles

namespace {

// Ranks of all interleavings of u and v (with repetition), unsorted.
void interleaving_ranks(const std::vector<Letter>& u, const std::vector<Letter>& v, int dim,
                        std::vector<std::uint64_t>& out) {
  out.clear();
  const int k = static_cast<int>(u.size());
  const int n = k + static_cast<int>(v.size());
  if (n > 62) throw NumericalError("shuffle of words longer than 62 letters");
  const std::uint64_t base = level_offset(dim, n);
  const auto d = static_cast<std::uint64_t>(dim);

  // Bit i of mask set: position i takes the next letter of u.
  const std::uint64_t full = n == 0 ? 0 : (std::uint64_t{1} << n) - 1;
  std::uint64_t mask = k == 0 ? 0 : (std::uint64_t{1} << k) - 1;
  while (true) {
    std::uint64_t rank = 0;
    std::size_t iu = 0;
    std::size_t iv = 0;
    for (int pos = 0; pos < n; ++pos) {
      const Letter l = ((mask >> pos) & 1U) ? u[iu++] : v[iv++];
      rank = rank * d + (l - 1);
    }
    out.push_back(base + rank);
    if (k == 0 || k == n) break;
    // Gosper's hack: next mask with the same popcount.
    const std::uint64_t c = mask & (~mask + 1);
    const std::uint64_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
    if (mask > full) break;
  }
}

// Adds coeff * (u shuffle v) into the accumulator with exact integer multiplicities.
template <class Accumulate>
void accumulate_word_shuffle(const std::vector<Letter>& u, const std::vector<Letter>& v, int dim,
                             double coeff, std::vector<std::uint64_t>& scratch,
                             Accumulate&& accumulate) {
  interleaving_ranks(u, v, dim, scratch);
  std::sort(scratch.begin(), scratch.end());
  std::size_t i = 0;
  while (i < scratch.size()) {
    std::size_t j = i;
    while (j < scratch.size() && scratch[j] == scratch[i]) ++j;
    const std::uint64_t multiplicity = j - i;
    accumulate(scratch[i], coeff * static_cast<double>(multiplicity));
    i = j;
  }
}

struct SparseEntry {
  std::vector<Letter> letters;
  double value;
};

std::vector<SparseEntry> entries_of(const SparseTensor& t) {
  std::vector<SparseEntry> out;
  out.reserve(t.nonzeros());
  for (const auto& [idx, v] : t.terms()) {
    if (v == 0.0) continue;
    out.push_back({word_at(idx, t.dim()).letters(), v});
  }
  return out;
}

}  // namespace

std::vector<std::pair<Word, std::uint64_t>> shuffle_words(const Word& u, const Word& v) {
  Letter max_letter = 1;
  for (auto l : u.letters()) max_letter = std::max(max_letter, l);
  for (auto l : v.letters()) max_letter = std::max(max_letter, l);
  const int dim = max_letter;

  std::vector<std::uint64_t> scratch;
  std::vector<std::pair<Word, std::uint64_t>> out;
  interleaving_ranks(u.letters(), v.letters(), dim, scratch);
  std::sort(scratch.begin(), scratch.end());
  std::size_t i = 0;
  while (i < scratch.size()) {
    std::size_t j = i;
    while (j < scratch.size() && scratch[j] == scratch[i]) ++j;
    out.emplace_back(word_at(scratch[i], dim), static_cast<std::uint64_t>(j - i));
    i = j;
  }
  return out;
}

SparseTensor shuffle(const SparseTensor& a, const SparseTensor& b, int out_level) {
  check_same_alphabet(a.dim(), b.dim());
  if (out_level < 0) throw ConfigError("shuffle output level must be >= 0");
  const int dim = a.dim();
  const auto ea = entries_of(a);
  const auto eb = entries_of(b);

  SparseTensor out(dim, out_level);
  std::vector<std::uint64_t> scratch;
  for (const auto& x : ea) {
    for (const auto& y : eb) {
      if (static_cast<int>(x.letters.size() + y.letters.size()) > out_level) continue;
      accumulate_word_shuffle(x.letters, y.letters, dim, x.value * y.value, scratch,
                              [&](std::uint64_t idx, double v) { out.add(idx, v); });
    }
  }
  return out;
}

TruncatedTensor shuffle(const TruncatedTensor& a, const TruncatedTensor& b, int out_level) {
  check_same_alphabet(a.dim(), b.dim());
  if (out_level < 0) throw ConfigError("shuffle output level must be >= 0");
  const int dim = a.dim();
  const auto ea = entries_of(SparseTensor::from_dense(a));
  const auto eb = entries_of(SparseTensor::from_dense(b));

  TruncatedTensor out(dim, out_level);
  auto c = out.coeffs();
  std::vector<std::uint64_t> scratch;
  for (const auto& x : ea) {
    for (const auto& y : eb) {
      if (static_cast<int>(x.letters.size() + y.letters.size()) > out_level) continue;
      accumulate_word_shuffle(x.letters, y.letters, dim, x.value * y.value, scratch,
                              [&](std::uint64_t idx, double v) { c[idx] += v; });
    }
  }
  return out;
}

SparseTensor shuffle_power(const SparseTensor& w, int k, int out_level) {
  if (k < 0) throw ConfigError("shuffle power must be >= 0");
  SparseTensor acc = SparseTensor::unit(w.dim(), out_level);
  for (int i = 0; i < k; ++i) acc = shuffle(acc, w, out_level);
  return acc;
}

TruncatedTensor shuffle_power(const TruncatedTensor& w, int k, int out_level) {
  return shuffle_power(SparseTensor::from_dense(w), k, out_level).to_dense(out_level);
}

SparseTensor polynomial_shuffle(const PolynomialCoefficients& poly, const SparseTensor& ell,
                                int level_cap) {
  const int degree = std::max(0, poly.degree());
  const int cap = level_cap > 0 ? level_cap : default_level_cap(ell.dim());
  const int out_level = degree * ell.level();
  if (out_level > cap) throw TensorCapExceeded(out_level, cap);

  SparseTensor out(ell.dim(), out_level);
  SparseTensor power = SparseTensor::unit(ell.dim(), out_level);
  for (int i = 0; i <= degree; ++i) {
    if (i > 0) power = shuffle(power, ell, out_level);
    const double ai = poly.a[static_cast<std::size_t>(i)];
    if (ai == 0.0) continue;
    SparseTensor term = power;
    term *= ai;
    out += term;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pairings

double pairing(const TruncatedTensor& a, const TruncatedTensor& b) {
  check_same_alphabet(a.dim(), b.dim());
  return simd::dot(a.coeffs(), b.coeffs());
}

double pairing(const SparseTensor& a, const TruncatedTensor& b) {
  check_same_alphabet(a.dim(), b.dim());
  const auto c = b.coeffs();
  double acc = 0.0;
  for (const auto& [idx, v] : a.terms()) {
    if (idx >= c.size()) break;
    acc += v * c[idx];
  }
  return acc;
}

double pairing(const SparseTensor& a, const SparseTensor& b) {
  check_same_alphabet(a.dim(), b.dim());
  double acc = 0.0;
  auto ia = a.terms().begin();
  auto ib = b.terms().begin();
  while (ia != a.terms().end() && ib != b.terms().end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      acc += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return acc;
}

double l2_norm(const TruncatedTensor& t) { return std::sqrt(pairing(t, t)); }

double l2_norm(const SparseTensor& t) { return std::sqrt(pairing(t, t)); }

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const TruncatedTensor& t) {
  nlohmann::json coeffs = nlohmann::json::array();
  const auto c = t.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    coeffs.push_back({word_at(i, t.dim()).letters(), c[i]});
  }
  j = nlohmann::json{{"d", t.dim()}, {"N", t.level()}, {"coeffs", std::move(coeffs)}};
}

void from_json(const nlohmann::json& j, TruncatedTensor& t) {
  try {
    TruncatedTensor out(j.at("d").get<int>(), j.at("N").get<int>());
    for (const auto& entry : j.at("coeffs")) {
      Word w(entry.at(0).get<std::vector<Letter>>());
      out.at(w) = entry.at(1).get<double>();
    }
    t = std::move(out);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tensor JSON: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const SparseTensor& t) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [idx, v] : t.terms()) {
    if (v == 0.0) continue;
    coeffs.push_back({word_at(idx, t.dim()).letters(), v});
  }
  j = nlohmann::json{{"d", t.dim()}, {"N", t.level()}, {"coeffs", std::move(coeffs)}};
}

void from_json(const nlohmann::json& j, SparseTensor& t) {
  try {
    SparseTensor out(j.at("d").get<int>(), j.at("N").get<int>());
    for (const auto& entry : j.at("coeffs")) {
      Word w(entry.at(0).get<std::vector<Letter>>());
      if (static_cast<int>(w.size()) > out.level()) throw DataError("word beyond tensor level");
      out.add(w, entry.at(1).get<double>());
    }
    t = std::move(out);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tensor JSON: ") + e.what());
  }
}

}  // namespace sigtest
