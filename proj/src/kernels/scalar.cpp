#include <cmath>

#include "kernels_impl.hpp"

namespace toxseq::kernels::scalar {

void affine(const double* W, std::size_t rows, std::size_t cols, const double* x,
            const double* b, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
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
    const double vr = v[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += w[c] * vr;
  }
}

void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* u,
               const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* g = G + r * cols;
    const double ur = u[r];
    for (std::size_t c = 0; c < cols; ++c) g[c] += ur * v[c];
  }
}

void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoeffs& k) {
  for (std::size_t j = 0; j < n; ++j) {
    m[j] = k.beta1 * m[j] + k.one_minus_beta1 * g[j];
    v[j] = k.beta2 * v[j] + k.one_minus_beta2 * g[j] * g[j];
    const double m_hat = m[j] / k.bias_correction1;
    const double v_hat = v[j] / k.bias_correction2;
    theta[j] -= k.lr * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

}  // namespace toxseq::kernels::scalar
