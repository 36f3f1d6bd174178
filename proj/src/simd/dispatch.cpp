#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace gigareg::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* choose_default() {
  const char* env = std::getenv("GIGAREG_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
  if (const KernelTable* avx2 = avx2_kernels()) return avx2;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{choose_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::Scalar,          "scalar",        &detail::convolve_rows, &detail::convolve_cols,
      &detail::box_rows,    &detail::box_cols, &detail::ncc_terms_row, &detail::ncc_grad_row,
      &detail::adam_step,   &detail::dot_bank,
  };
  return table;
}

const KernelTable* avx2_kernels() {
#if defined(GIGAREG_WITH_AVX2)
  if (cpu_has_avx2()) return &detail::avx2_table();
#endif
  return nullptr;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool force(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels();
  if (table == nullptr) return false;
  active().store(table, std::memory_order_release);
  return true;
}

}  // namespace gigareg::simd
