#pragma once

// Minimal dense linear algebra, activations and the project's PRNG.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace toxseq {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  // Takes ownership of row-major data; throws DimensionMismatch on size mismatch.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// W·x + b with a fixed left-to-right summation order per row.
Vector affine(const Matrix& W, std::span<const double> x, std::span<const double> b);

Vector concat(std::span<const double> a, std::span<const double> b);

// Logistic sigmoid. The argument is clamped to [-36, 36] so the result stays
// strictly inside (0, 1) in double precision.
double sigmoid(double x) noexcept;
Vector sigmoid(std::span<const double> x);

// tanh with the argument clamped to [-18, 18], keeping the result strictly
// inside (-1, 1).
double tanh_clamped(double x) noexcept;
Vector tanh_v(std::span<const double> x);

/// SplitMix64 generator.
///
/// state += 0x9E3779B97F4A7C15; z = state;
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
/// return z ^ (z >> 31);
///
/// Only integer arithmetic is involved, so streams are identical on every
/// platform. Doubles are taken from the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1).
  double uniform01() noexcept;
  // Uniform on [lo, hi].
  double uniform(double lo, double hi) noexcept;
  // Unbiased integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  // Independent stream derived from this generator's seed and a tag.
  static Rng derive(std::uint64_t seed, std::uint64_t tag) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by Rng::below.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// Entries i.i.d. uniform on [-scale, scale], drawn in row-major order.
Matrix init_uniform(Rng& rng, std::size_t rows, std::size_t cols, double scale);

// sqrt(6 / (fan_in + fan_out)).
double glorot_scale(std::size_t fan_in, std::size_t fan_out) noexcept;

}  // namespace toxseq
