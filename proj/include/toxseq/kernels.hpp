#pragma once

// Dense inner-loop kernels with a scalar reference and SIMD variants.
//
// Every SIMD variant reproduces the scalar reference bit for bit: lanes run
// over independent outputs (rows, columns, parameters) and each output keeps
// the scalar left-to-right accumulation order. Multiplies and adds are never
// fused. The whole project is built with -ffp-contract=off for the same
// reason.

#include <cstddef>
#include <string_view>
#include <vector>

namespace toxseq::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b) noexcept;

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double one_minus_beta1;
  double one_minus_beta2;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
  double epsilon;
};

struct KernelTable {
  Backend backend;

  // y[r] = (sum_c W[r,c] * x[c]) + b[r]; b may be null (treated as zero).
  void (*affine)(const double* W, std::size_t rows, std::size_t cols, const double* x,
                 const double* b, double* y);

  // y[c] += sum_r W[r,c] * v[r], r ascending.
  void (*gemv_t_acc)(const double* W, std::size_t rows, std::size_t cols, const double* v,
                     double* y);

  // G[r,c] += u[r] * v[c].
  void (*outer_acc)(double* G, std::size_t rows, std::size_t cols, const double* u,
                    const double* v);

  // One Adam update over n parameters.
  void (*adam_update)(double* theta, double* m, double* v, const double* g, std::size_t n,
                      const AdamCoeffs& k);
};

const KernelTable& scalar_table() noexcept;

// Null when the backend was not compiled in or the CPU lacks support.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

// Backends usable on this machine, scalar first.
std::vector<Backend> available_backends();

Backend best_available() noexcept;

// Kernel table used by the library. Defaults to best_available().
const KernelTable& active() noexcept;

// Throws toxseq::Error(InvalidArgument) when the backend is unavailable.
void select(Backend b);

}  // namespace toxseq::kernels
