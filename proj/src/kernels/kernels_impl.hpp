#pragma once

#include "toxseq/kernels.hpp"

namespace toxseq::kernels {

namespace scalar {
void affine(const double* W, std::size_t rows, std::size_t cols, const double* x,
            const double* b, double* y);
void gemv_t_acc(const double* W, std::size_t rows, std::size_t cols, const double* v,
                double* y);
void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* u,
               const double* v);
void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoeffs& k);
}  // namespace scalar

#if defined(TOXSEQ_HAVE_AVX2)
namespace avx2 {
void affine(const double* W, std::size_t rows, std::size_t cols, const double* x,
            const double* b, double* y);
void gemv_t_acc(const double* W, std::size_t rows, std::size_t cols, const double* v,
                double* y);
void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* u,
               const double* v);
void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoeffs& k);
}  // namespace avx2
#endif

#if defined(TOXSEQ_HAVE_NEON)
namespace neon {
void affine(const double* W, std::size_t rows, std::size_t cols, const double* x,
            const double* b, double* y);
void gemv_t_acc(const double* W, std::size_t rows, std::size_t cols, const double* v,
                double* y);
void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* u,
               const double* v);
void adam_update(double* theta, double* m, double* v, const double* g, std::size_t n,
                 const AdamCoeffs& k);
}  // namespace neon
#endif

}  // namespace toxseq::kernels
