#include <cstdlib>
#include <string>

#include "selfavg/kernels.hpp"

namespace selfavg::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, &detail::fwht_scalar, &detail::gather_product_sum_scalar};
  return table;
}

const KernelTable* avx2_table() {
#if defined(SELFAVG_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  static const KernelTable table{Isa::avx2, &detail::fwht_avx2, &detail::gather_product_sum_avx2};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    if (const char* env = std::getenv("SELFAVG_SIMD"); env && std::string(env) == "scalar") return scalar_table();
    if (const auto* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace selfavg::kernels
