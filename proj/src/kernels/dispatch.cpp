#include <atomic>
#include <string>

#include "kernels_impl.hpp"
#include "toxseq/error.hpp"

namespace toxseq::kernels {

std::string_view to_string(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{Backend::Scalar, scalar::affine, scalar::gemv_t_acc,
                                 scalar::outer_acc, scalar::adam_update};
  return table;
}

const KernelTable* avx2_table() noexcept {
#if defined(TOXSEQ_HAVE_AVX2)
  static const KernelTable table{Backend::Avx2, avx2::affine, avx2::gemv_t_acc,
                                 avx2::outer_acc, avx2::adam_update};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() noexcept {
#if defined(TOXSEQ_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  static const KernelTable table{Backend::Neon, neon::affine, neon::gemv_t_acc,
                                 neon::outer_acc, neon::adam_update};
  return &table;
#else
  return nullptr;
#endif
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::Scalar};
  if (avx2_table()) out.push_back(Backend::Avx2);
  if (neon_table()) out.push_back(Backend::Neon);
  return out;
}

Backend best_available() noexcept {
  if (avx2_table()) return Backend::Avx2;
  if (neon_table()) return Backend::Neon;
  return Backend::Scalar;
}

namespace {

const KernelTable* table_for(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return &scalar_table();
    case Backend::Avx2: return avx2_table();
    case Backend::Neon: return neon_table();
  }
  return nullptr;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> ptr{table_for(best_available())};
  return ptr;
}

}  // namespace

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void select(Backend b) {
  const KernelTable* t = table_for(b);
  if (!t)
    throw Error(ErrorKind::InvalidArgument,
                "kernel backend '" + std::string(to_string(b)) + "' is not available");
  current().store(t, std::memory_order_release);
}

}  // namespace toxseq::kernels
