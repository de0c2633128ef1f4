#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and,
// on x86-64, an AVX2 version; `active()` picks one at runtime from CPUID.
// Setting SELFAVG_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace selfavg::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  /// In-place unnormalized Walsh-Hadamard transform; size must be a power of two.
  /// out[s] = sum_x in[x] * (-1)^popcount(x & s).
  void (*fwht)(double* data, std::size_t size);
  /// sum_{i < n_sites} prod_g table[bases[g] ^ (1 << i)]^exponents[g].
  double (*gather_product_sum)(const double* table, const std::uint32_t* bases, const int* exponents,
                               std::size_t n_groups, std::size_t n_sites);
};

const KernelTable& scalar_table();

/// nullptr when the CPU (or the build) has no AVX2 support.
const KernelTable* avx2_table();

/// The table used by the library; chosen once per process.
const KernelTable& active();

inline void fwht(std::span<double> data) { active().fwht(data.data(), data.size()); }

namespace detail {
void fwht_scalar(double* data, std::size_t size);
double gather_product_sum_scalar(const double* table, const std::uint32_t* bases, const int* exponents,
                                 std::size_t n_groups, std::size_t n_sites);
#if defined(SELFAVG_HAVE_AVX2_TU)
void fwht_avx2(double* data, std::size_t size);
double gather_product_sum_avx2(const double* table, const std::uint32_t* bases, const int* exponents,
                               std::size_t n_groups, std::size_t n_sites);
#endif
}  // namespace detail

}  // namespace selfavg::kernels
