#include "selfavg/kernels.hpp"

#if defined(SELFAVG_HAVE_AVX2_TU)

#include <immintrin.h>

namespace selfavg::kernels::detail {

namespace {

// h = 1 and h = 2 butterflies stay inside one 256-bit register.
inline __m256d butterfly_pairs(__m256d v) {
  const __m256d swapped = _mm256_permute_pd(v, 0b0101);  // x1 x0 x3 x2
  return _mm256_blend_pd(_mm256_add_pd(v, swapped), _mm256_sub_pd(swapped, v), 0b1010);
}

inline __m256d butterfly_halves(__m256d v) {
  const __m256d swapped = _mm256_permute2f128_pd(v, v, 0x01);  // x2 x3 x0 x1
  return _mm256_blend_pd(_mm256_add_pd(v, swapped), _mm256_sub_pd(swapped, v), 0b1100);
}

}  // namespace

void fwht_avx2(double* data, std::size_t size) {
  if (size < 4) {
    fwht_scalar(data, size);
    return;
  }
  for (std::size_t i = 0; i < size; i += 4) {
    __m256d v = _mm256_loadu_pd(data + i);
    v = butterfly_pairs(v);
    v = butterfly_halves(v);
    _mm256_storeu_pd(data + i, v);
  }
  for (std::size_t h = 4; h < size; h <<= 1) {
    for (std::size_t i = 0; i < size; i += 2 * h) {
      for (std::size_t j = i; j < i + h; j += 4) {
        const __m256d a = _mm256_loadu_pd(data + j);
        const __m256d b = _mm256_loadu_pd(data + j + h);
        _mm256_storeu_pd(data + j, _mm256_add_pd(a, b));
        _mm256_storeu_pd(data + j + h, _mm256_sub_pd(a, b));
      }
    }
  }
}

double gather_product_sum_avx2(const double* table, const std::uint32_t* bases, const int* exponents,
                               std::size_t n_groups, std::size_t n_sites) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const __m128i lane = _mm_setr_epi32(0, 1, 2, 3);
  const __m128i one = _mm_set1_epi32(1);
  for (; i + 4 <= n_sites; i += 4) {
    const __m128i bits = _mm_sllv_epi32(one, _mm_add_epi32(_mm_set1_epi32(static_cast<int>(i)), lane));
    __m256d prod = _mm256_set1_pd(1.0);
    for (std::size_t g = 0; g < n_groups; ++g) {
      const __m128i idx = _mm_xor_si128(_mm_set1_epi32(static_cast<int>(bases[g])), bits);
      const __m256d v = _mm256_i32gather_pd(table, idx, 8);
      __m256d p = v;
      for (int e = 1; e < exponents[g]; ++e) p = _mm256_mul_pd(p, v);
      prod = _mm256_mul_pd(prod, p);
    }
    acc = _mm256_add_pd(acc, prod);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n_sites; ++i) {
    const std::uint32_t bit = 1U << i;
    double prod = 1.0;
    for (std::size_t g = 0; g < n_groups; ++g) {
      const double v = table[bases[g] ^ bit];
      double p = v;
      for (int e = 1; e < exponents[g]; ++e) p *= v;
      prod *= p;
    }
    sum += prod;
  }
  return sum;
}

}  // namespace selfavg::kernels::detail

#endif
