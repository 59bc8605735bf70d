// Compiled with -mavx2 (and never -mfma); only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace toxseq::kernels::avx2 {

void affine(const double* W, std::size_t rows, std::size_t cols, const double* x,
            const double* b, double* y) {
  std::size_t r = 0;
  // Four rows per pass; each lane owns one row and sums its columns in order.
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = W + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < cols; ++c) {
      const __m256d w = _mm256_set_pd(w3[c], w2[c], w1[c], w0[c]);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(w, _mm256_set1_pd(x[c])));
    }
    if (b) acc = _mm256_add_pd(acc, _mm256_loadu_pd(b + r));
    _mm256_storeu_pd(y + r, acc);
  }
  for (; r < rows; ++r) {
    const double* w = W + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] = b ? acc + b[r] : acc;
  }
}

void gemv_t_acc(const double* W, std::size_t rows, std::size_t cols, const double* v,
                double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const __m256d vr = _mm256_set1_pd(v[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(w + c), vr);
      _mm256_storeu_pd(y + c, _mm256_add_pd(_mm256_loadu_pd(y + c), prod));
    }
    for (; c < cols; ++c) y[c] += w[c] * v[r];
  }
}

void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* u,
               const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* g = G + r * cols;
    const __m256d ur = _mm256_set1_pd(u[r]);
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d prod = _mm256_mul_pd(ur, _mm256_loadu_pd(v + c));
      _mm256_storeu_pd(g + c, _mm256_add_pd(_mm256_loadu_pd(g + c), prod));
    }
    for (; c < cols; ++c) g[c] += u[r] * v[c];
  }
}

void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoeffs& k) {
  const __m256d b1 = _mm256_set1_pd(k.beta1);
  const __m256d b2 = _mm256_set1_pd(k.beta2);
  const __m256d omb1 = _mm256_set1_pd(k.one_minus_beta1);
  const __m256d omb2 = _mm256_set1_pd(k.one_minus_beta2);
  const __m256d bc1 = _mm256_set1_pd(k.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(k.bias_correction2);
  const __m256d lr = _mm256_set1_pd(k.lr);
  const __m256d eps = _mm256_set1_pd(k.epsilon);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d gj = _mm256_loadu_pd(g + j);
    __m256d mj = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + j)), _mm256_mul_pd(omb1, gj));
    __m256d vj = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + j)),
                               _mm256_mul_pd(_mm256_mul_pd(omb2, gj), gj));
    _mm256_storeu_pd(m + j, mj);
    _mm256_storeu_pd(v + j, vj);
    const __m256d m_hat = _mm256_div_pd(mj, bc1);
    const __m256d v_hat = _mm256_div_pd(vj, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(theta + j, _mm256_sub_pd(_mm256_loadu_pd(theta + j), step));
  }
  for (; j < n; ++j) {
    m[j] = k.beta1 * m[j] + k.one_minus_beta1 * g[j];
    v[j] = k.beta2 * v[j] + k.one_minus_beta2 * g[j] * g[j];
    const double m_hat = m[j] / k.bias_correction1;
    const double v_hat = v[j] / k.bias_correction2;
    theta[j] -= k.lr * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

}  // namespace toxseq::kernels::avx2
