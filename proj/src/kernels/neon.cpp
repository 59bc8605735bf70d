// AArch64 Advanced SIMD variant. Two double lanes; same ordering contract as avx2.cpp.

#include <arm_neon.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace toxseq::kernels::neon {

void affine(const double* W, std::size_t rows, std::size_t cols, const double* x,
            const double* b, double* y) {
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    const double* w0 = W + r * cols;
    const double* w1 = w0 + cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t c = 0; c < cols; ++c) {
      const double lanes[2] = {w0[c], w1[c]};
      acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(lanes), vdupq_n_f64(x[c])));
    }
    if (b) acc = vaddq_f64(acc, vld1q_f64(b + r));
    vst1q_f64(y + r, acc);
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
    const float64x2_t vr = vdupq_n_f64(v[r]);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2)
      vst1q_f64(y + c, vaddq_f64(vld1q_f64(y + c), vmulq_f64(vld1q_f64(w + c), vr)));
    for (; c < cols; ++c) y[c] += w[c] * v[r];
  }
}

void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* u,
               const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* g = G + r * cols;
    const float64x2_t ur = vdupq_n_f64(u[r]);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2)
      vst1q_f64(g + c, vaddq_f64(vld1q_f64(g + c), vmulq_f64(ur, vld1q_f64(v + c))));
    for (; c < cols; ++c) g[c] += u[r] * v[c];
  }
}

void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoeffs& k) {
  const float64x2_t b1 = vdupq_n_f64(k.beta1);
  const float64x2_t b2 = vdupq_n_f64(k.beta2);
  const float64x2_t omb1 = vdupq_n_f64(k.one_minus_beta1);
  const float64x2_t omb2 = vdupq_n_f64(k.one_minus_beta2);
  const float64x2_t bc1 = vdupq_n_f64(k.bias_correction1);
  const float64x2_t bc2 = vdupq_n_f64(k.bias_correction2);
  const float64x2_t lr = vdupq_n_f64(k.lr);
  const float64x2_t eps = vdupq_n_f64(k.epsilon);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t gj = vld1q_f64(g + j);
    const float64x2_t mj = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + j)), vmulq_f64(omb1, gj));
    const float64x2_t vj =
        vaddq_f64(vmulq_f64(b2, vld1q_f64(v + j)), vmulq_f64(vmulq_f64(omb2, gj), gj));
    vst1q_f64(m + j, mj);
    vst1q_f64(v + j, vj);
    const float64x2_t step = vdivq_f64(vmulq_f64(lr, vdivq_f64(mj, bc1)),
                                       vaddq_f64(vsqrtq_f64(vdivq_f64(vj, bc2)), eps));
    vst1q_f64(theta + j, vsubq_f64(vld1q_f64(theta + j), step));
  }
  for (; j < n; ++j) {
    m[j] = k.beta1 * m[j] + k.one_minus_beta1 * g[j];
    v[j] = k.beta2 * v[j] + k.one_minus_beta2 * g[j] * g[j];
    const double m_hat = m[j] / k.bias_correction1;
    const double v_hat = v[j] / k.bias_correction2;
    theta[j] -= k.lr * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

}  // namespace toxseq::kernels::neon
