#include "toxseq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "toxseq/error.hpp"
#include "toxseq/kernels.hpp"

namespace toxseq {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw Error(ErrorKind::DimensionMismatch,
                "matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                    std::to_string(rows * cols));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector affine(const Matrix& W, std::span<const double> x, std::span<const double> b) {
  if (W.cols() != x.size() || W.rows() != b.size())
    throw Error(ErrorKind::DimensionMismatch,
                "affine: W is " + std::to_string(W.rows()) + "x" + std::to_string(W.cols()) +
                    ", x has " + std::to_string(x.size()) + ", b has " +
                    std::to_string(b.size()));
  Vector y(W.rows());
  kernels::active().affine(W.flat().data(), W.rows(), W.cols(), x.data(), b.data(), y.data());
  return y;
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double sigmoid(double x) noexcept {
  x = std::clamp(x, -36.0, 36.0);
  return 1.0 / (1.0 + std::exp(-x));
}

Vector sigmoid(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return sigmoid(v); });
  return y;
}

double tanh_clamped(double x) noexcept { return std::tanh(std::clamp(x, -18.0, 18.0)); }

Vector tanh_v(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return tanh_clamped(v); });
  return y;
}

std::uint64_t Rng::next_u64() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) noexcept {
  // (hi - lo) * u lands in [0, hi - lo); the top end is reachable only through rounding.
  return lo + (hi - lo) * uniform01();
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Rejection on the largest multiple of n.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t tag) noexcept {
  Rng mix(seed ^ (tag * 0xD1B54A32D192ED03ULL));
  return Rng(mix.next_u64());
}

Matrix init_uniform(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  if (!(scale > 0.0))
    throw Error(ErrorKind::NonPositiveScale, "init scale must be > 0");
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(-scale, scale);
  return m;
}

double glorot_scale(std::size_t fan_in, std::size_t fan_out) noexcept {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace toxseq
